#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sheetforge/det_kernels.hpp"
#include "sheetforge/stats_harness.hpp"
#include "sheetforge/theta_fields.hpp"
#include "sheetforge/weak_approx.hpp"

namespace sheetforge {

inline constexpr int kSchemaVersion = 1;

enum class Probe { Covariance, Gaussianity, Independence, Profiles, H3, H4 };

std::string_view to_string(Probe p) noexcept;

struct H3Config {
  std::vector<std::pair<StepFunction, StepFunction>> pairs;  // empty: `random_pairs` drawn from the seed
  std::size_t random_pairs = 5;
  std::size_t replicates = 5000;
  double n = 100.0;
  double kac_stroock_constant = 1.0;
};

struct H4Config {
  H4Setup setup;
  std::size_t replicates = 2000;
  double n = 100.0;
};

struct ExperimentConfig {
  ThetaSpec theta;  // theta.n is ignored; the n schedule drives the scale
  KernelSpec k1 = IndicatorKernel{};
  KernelSpec k2 = IndicatorKernel{};
  std::optional<HypothesisProfile> profile1;
  std::optional<HypothesisProfile> profile2;
  std::size_t lattice_m = 256;
  EvalGrid eval_grid = EvalGrid::uniform(4);
  std::vector<double> n_schedule{100.0};
  std::size_t replicates = 2000;
  std::uint64_t master_seed = 1;
  std::vector<Probe> probes;
  std::optional<H3Config> h3;
  std::optional<H4Config> h4;
  std::string output_dir = "sheetforge-out";

  bool has_probe(Probe p) const;
};

/// Parses and validates a config object. Unknown fields, a wrong
/// schema_version and any component validation failure raise ConfigError
/// (or the component's own error code).
ExperimentConfig parse_config(const Json& j);
Json to_json(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Raw JSON of a named preset; ConfigError for an unknown name.
Json preset(std::string_view name);

/// Applies "a.b.c=value" assignments to the raw config. The value is read as
/// JSON when it parses, otherwise as a string.
Json apply_overrides(Json raw, const std::vector<std::string>& assignments);

enum class Command { Simulate, Covariance, KernelTable, CheckHypotheses, Sweep, Run };

std::string_view to_string(Command c) noexcept;
Command parse_command(std::string_view name);

struct RunOptions {
  std::size_t workers = 0;                  // 0: SHEETFORGE_THREADS or hardware
  std::vector<std::string> overrides;       // recorded in provenance
  std::size_t simulate_replicate = 0;
};

struct CheckOutcome {
  std::string name;
  bool passed = true;
  bool report_only = false;
  std::string detail;
};

struct RunResult {
  std::vector<CheckOutcome> checks;
  std::vector<std::filesystem::path> files;

  bool all_passed() const;
};

/// Runs one subcommand and writes every artifact below config.output_dir.
/// provenance.json is always written first; its `generated_at` field is the
/// only run-dependent content.
RunResult execute(Command command, const ExperimentConfig& config, const RunOptions& options = {});

/// Random step-function pairs with breaks on the 1/16 grid, values in [-1,1].
std::vector<std::pair<StepFunction, StepFunction>> random_step_pairs(std::size_t count, std::uint64_t seed);

/// Seed of the covariance stream for n_schedule[index].
std::uint64_t schedule_seed(std::uint64_t master_seed, std::size_t index);

}  // namespace sheetforge
