#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sheetforge/errors.hpp"

namespace sheetforge {

using Json = nlohmann::json;

// Rejects any key of `obj` outside `allowed`; unknown config fields are errors.
void require_known_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                        std::string_view context);

template <class T>
T require_field(const Json& obj, std::string_view key, std::string_view context) {
  auto it = obj.find(std::string(key));
  if (it == obj.end())
    fail(ErrorCode::ConfigError, std::string(context) + ": missing field '" + std::string(key) + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError,
         std::string(context) + ": bad value for '" + std::string(key) + "': " + e.what());
  }
}

template <class T>
T optional_field(const Json& obj, std::string_view key, T fallback, std::string_view context) {
  if (!obj.contains(std::string(key))) return fallback;
  return require_field<T>(obj, key, context);
}

}  // namespace sheetforge
