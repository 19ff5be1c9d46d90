#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sheetforge/experiment.hpp"

namespace sf = sheetforge;

namespace {

// Exit codes: 0 all checks passed, 1 a check failed, 2 error.
constexpr int kChecksFailed = 1;
constexpr int kError = 2;

sf::Json load_raw(const std::string& config_path, const std::string& preset_name) {
  if (!config_path.empty() && !preset_name.empty())
    sf::fail(sf::ErrorCode::ConfigError, "give either --config or --preset, not both");
  if (!preset_name.empty()) return sf::preset(preset_name);
  if (config_path.empty()) sf::fail(sf::ErrorCode::ConfigError, "--config or --preset is required");
  std::ifstream in(config_path);
  if (!in) sf::fail(sf::ErrorCode::IoError, "cannot read config " + config_path);
  sf::Json raw = sf::Json::parse(in, nullptr, false);
  if (raw.is_discarded()) sf::fail(sf::ErrorCode::ConfigError, "config " + config_path + " is not valid JSON");
  return raw;
}

void report_error(const sf::Json& err, const std::string& out_dir) {
  std::cerr << err.dump() << '\n';
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream f(std::filesystem::path(out_dir) / "error.json");
  if (f) f << err.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-approximation experiments for two-parameter Gaussian fields"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0, replicate = 0;

  std::vector<CLI::App*> subs;
  for (const char* name : {"simulate", "covariance", "kernel-table", "check-hypotheses", "sweep", "run"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)");
    sub->add_option("--preset", preset_name, "named preset instead of a config file");
    sub->add_option("--set", sets, "override a config field, key.path=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "master seed (overrides master_seed)");
    sub->add_option("--threads", threads, "worker cap (speed only; also SHEETFORGE_THREADS)");
    if (std::string(name) == "simulate") sub->add_option("--replicate", replicate, "replicate index to dump");
    subs.push_back(sub);
  }
  app.add_flag_callback("--list-presets", [] {
    for (const auto& p : sf::preset_names()) std::cout << p << '\n';
    std::exit(0);
  });

  CLI11_PARSE(app, argc, argv);

  std::string command_name;
  for (auto* sub : subs)
    if (sub->parsed()) command_name = sub->get_name();

  std::string effective_out = out_dir;
  try {
    std::vector<std::string> overrides = sets;
    if (!out_dir.empty()) overrides.push_back("output_dir=\"" + out_dir + "\"");
    if (seed) overrides.push_back("master_seed=" + std::to_string(*seed));
    sf::Json raw = sf::apply_overrides(load_raw(config_path, preset_name), overrides);
    if (effective_out.empty() && raw.contains("output_dir") && raw["output_dir"].is_string())
      effective_out = raw["output_dir"].get<std::string>();
    const sf::ExperimentConfig config = sf::parse_config(raw);
    effective_out = config.output_dir;

    sf::RunOptions options;
    options.workers = threads;
    options.overrides = overrides;
    options.simulate_replicate = replicate;
    const auto result = sf::execute(sf::parse_command(command_name), config, options);

    for (const auto& check : result.checks)
      std::cout << (check.report_only ? "INFO" : check.passed ? "PASS" : "FAIL") << "  " << check.name << "  "
                << check.detail << '\n';
    std::cout << "wrote " << result.files.size() << " files to " << config.output_dir << '\n';
    return result.all_passed() ? 0 : kChecksFailed;
  } catch (const sf::Error& e) {
    report_error(sf::Json{{"error", sf::to_string(e.code())}, {"message", e.what()}}, effective_out);
    return kError;
  } catch (const std::exception& e) {
    report_error(sf::Json{{"error", "Unexpected"}, {"message", e.what()}}, effective_out);
    return kError;
  }
}
