#include "sheetforge/json_util.hpp"

#include <algorithm>

namespace sheetforge {

void require_known_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
  if (!obj.is_object())
    fail(ErrorCode::ConfigError, std::string(context) + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      fail(ErrorCode::ConfigError,
           std::string(context) + ": unknown field '" + item.key() + "'");
  }
}

}  // namespace sheetforge
