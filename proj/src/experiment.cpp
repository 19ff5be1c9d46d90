#include "sheetforge/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "sheetforge/rng.hpp"

namespace sheetforge {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kH3Stream = 0x4833;
constexpr std::uint64_t kH4Stream = 0x4834;
constexpr std::uint64_t kStepStream = 0x5354;

const std::vector<std::pair<Probe, std::string_view>> kProbeNames{
    {Probe::Covariance, "covariance"}, {Probe::Gaussianity, "gaussianity"}, {Probe::Independence, "independence"},
    {Probe::Profiles, "profiles"},     {Probe::H3, "h3"},                   {Probe::H4, "h4"}};

const std::vector<std::pair<Command, std::string_view>> kCommandNames{
    {Command::Simulate, "simulate"},          {Command::Covariance, "covariance"},
    {Command::KernelTable, "kernel-table"},   {Command::CheckHypotheses, "check-hypotheses"},
    {Command::Sweep, "sweep"},                {Command::Run, "run"}};

Probe parse_probe(const std::string& name) {
  for (const auto& [p, s] : kProbeNames)
    if (s == name) return p;
  fail(ErrorCode::ConfigError, "probes: unknown probe '" + name + "'");
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string n_label(double n) {
  std::ostringstream out;
  out << std::setprecision(10) << n;
  std::string s = out.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir, RunResult& result) : dir_(std::move(dir)), result_(result) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void json(const std::string& name, const Json& value) {
    text(name, value.dump(2) + "\n");
  }

  template <class Fn>
  void stream(const std::string& name, Fn&& fn) {
    std::ostringstream out;
    fn(out);
    text(name, out.str());
  }

  void text(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
    result_.files.push_back(path);
  }

 private:
  fs::path dir_;
  RunResult& result_;
};

Json derived_constants(const ExperimentConfig& c) {
  Json d = Json::object();
  if (c.theta.kind != ThetaKind::KacStroock) {
    d["K"] = k_constant(c.theta.model, c.theta.theta);
    d["a_theta"] = exponent(c.theta.model, c.theta.theta).a;
    d["a_star"] = a_star(c.theta.model, c.theta.theta, c.theta.m_guard);
    d["m_guard"] = c.theta.m_guard;
    d["angle_valid"] = check_angle(c.theta.model, c.theta.theta, c.theta.m_guard);
    d["h3_constant"] = h3_constant(c.theta);
  }
  auto kernel_constants = [](const KernelSpec& k) {
    Json j{{"kind", kernel_name(k)}};
    if (const auto* f = std::get_if<FbmVolterra>(&k)) j["d_alpha"] = d_alpha(f->alpha);
    return j;
  };
  d["k1"] = kernel_constants(c.k1);
  d["k2"] = kernel_constants(c.k2);
  return d;
}

ThetaSpec theta_at(const ExperimentConfig& c, double n) {
  ThetaSpec spec = c.theta;
  spec.n = n;
  return spec;
}

struct CovarianceOutcome {
  CovarianceReport report;
  std::optional<KsResult> ks;
  std::optional<KsResult> ks_uncentered;
  std::optional<IndependenceReport> independence;
};

CovarianceOutcome covariance_at(const ExperimentConfig& c, std::size_t index, const RunOptions& opt,
                                bool want_gauss, bool want_indep) {
  const double n = c.n_schedule.at(index);
  const Lattice lattice(c.lattice_m);
  const SeparableOperator op(c.k1, c.k2, lattice, c.eval_grid);
  const auto points = grid_points(c.eval_grid);
  const bool pair = want_indep && c.theta.kind != ThetaKind::KacStroock;
  const auto blocks = sample_operators(theta_at(c, n), lattice, {&op}, c.replicates, schedule_seed(c.master_seed, index),
                                       pair, opt.workers);
  const SampleBlock& main = pair && c.theta.kind == ThetaKind::LevySin ? blocks[1] : blocks[0];
  const auto theory = theoretical_covariance(c.k1, c.k2, points);
  const Centering centering = default_centering(c.theta.kind);

  CovarianceOutcome out{empirical_covariance(main.values, points, centering, theory), {}, {}, {}};
  if (want_gauss) {
    const auto last = static_cast<Eigen::Index>(points.size() - 1);
    std::vector<double> col(static_cast<std::size_t>(main.values.rows()));
    for (Eigen::Index r = 0; r < main.values.rows(); ++r) col[static_cast<std::size_t>(r)] = main.values(r, last);
    out.ks = gaussianity_test(col, theory(last, last), centering);
    out.ks_uncentered = gaussianity_test(col, theory(last, last), Centering::ZeroMean);
  }
  if (pair) out.independence = independence_probe(blocks[0], blocks[1], points, centering);
  return out;
}

void record_covariance(ArtifactWriter& w, RunResult& result, const ExperimentConfig& c, std::size_t index,
                       const CovarianceOutcome& o) {
  const std::string tag = "n" + n_label(c.n_schedule[index]);
  w.json("covariance_" + tag + ".json", to_json(o.report));
  w.stream("covariance_" + tag + ".txt", [&](std::ostream& out) { write_text(out, o.report); });
  w.stream("covariance_" + tag + ".csv", [&](std::ostream& out) { write_csv(out, o.report); });
  std::ostringstream detail;
  detail << "max_abs_deviation=" << o.report.max_abs_deviation << " max_std_deviation=" << o.report.max_std_deviation;
  result.checks.push_back({"covariance_" + tag, o.report.passes(), false, detail.str()});
  if (o.ks) {
    Json j{{"point", Json::array({o.report.points.back().s, o.report.points.back().t})},
           {"test", to_json(*o.ks)},
           {"uncentered", to_json(*o.ks_uncentered)}};
    w.json("gaussianity_" + tag + ".json", j);
    result.checks.push_back({"gaussianity_" + tag, o.ks->p_value > 0.01, false, "p=" + std::to_string(o.ks->p_value)});
  }
  if (o.independence) {
    w.json("independence_" + tag + ".json", to_json(*o.independence));
    result.checks.push_back({"independence_" + tag, o.independence->passed, false,
                             "max_std_deviation=" + std::to_string(o.independence->max_std_deviation)});
  }
}

Json profile_block(const KernelSpec& spec, const std::optional<HypothesisProfile>& given, bool& passed) {
  const KernelRowCache cache(spec, uniform_points(32));
  const HypothesisProfile profile = given ? *given : default_profile(cache);
  const auto report = evaluate_profile(cache, profile);
  passed = report.passed;
  return Json{{"kernel", spec}, {"profile", profile}, {"source", given ? "config" : "fitted"}, {"report", to_json(report)}};
}

double window_beta(const KernelSpec& spec, const std::optional<HypothesisProfile>& given) {
  if (given && given->regime == Regime::H1Prime) return given->beta;
  const KernelRowCache cache(spec, uniform_points(32));
  const auto fitted = default_profile(cache);
  if (fitted.regime == Regime::H1Prime) return fitted.beta;
  return fit_window_bound(cache).second;
}

void run_hypotheses(ArtifactWriter& w, RunResult& result, const ExperimentConfig& c, const RunOptions& opt,
                    bool profiles, bool h3, bool h4) {
  if (profiles) {
    bool p1 = true, p2 = true;
    Json j{{"k1", profile_block(c.k1, c.profile1, p1)}, {"k2", profile_block(c.k2, c.profile2, p2)}};
    w.json("profiles.json", j);
    result.checks.push_back({"profile_k1", p1, false, kernel_name(c.k1)});
    result.checks.push_back({"profile_k2", p2, false, kernel_name(c.k2)});
  }
  const Lattice lattice(c.lattice_m);
  if (h3) {
    const H3Config cfg = c.h3.value_or(H3Config{});
    const auto pairs = cfg.pairs.empty() ? random_step_pairs(cfg.random_pairs, mix64(c.master_seed, kStepStream))
                                         : cfg.pairs;
    const auto results = h3_probe(theta_at(c, cfg.n), lattice, pairs, cfg.replicates, mix64(c.master_seed, kH3Stream),
                                  cfg.kac_stroock_constant, 5.0, opt.workers);
    Json arr = Json::array();
    bool all = true;
    bool report_only = false;
    for (std::size_t k = 0; k < results.size(); ++k) {
      Json entry = to_json(results[k]);
      entry["f"] = pairs[k].first;
      entry["g"] = pairs[k].second;
      arr.push_back(entry);
      all = all && results[k].passed;
      report_only = report_only || results[k].report_only;
    }
    w.json("h3.json", Json{{"n", cfg.n}, {"replicates", cfg.replicates}, {"pairs", arr}});
    result.checks.push_back({"h3", all, report_only, std::to_string(results.size()) + " pairs"});
  }
  if (h4) {
    const H4Config cfg = c.h4.value_or(H4Config{});
    const double b1 = window_beta(c.k1, c.profile1), b2 = window_beta(c.k2, c.profile2);
    const auto rep = h4_probe(theta_at(c, cfg.n), c.k1, c.k2, b1, b2, cfg.setup, lattice, cfg.replicates,
                              mix64(c.master_seed, kH4Stream), opt.workers);
    Json j = to_json(rep);
    j["n"] = cfg.n;
    j["replicates"] = cfg.replicates;
    j["beta"] = Json::array({b1, b2});
    w.json("h4.json", j);
    result.checks.push_back({"h4", rep.consistent, false,
                             std::string(rep.heavy_tail_warning ? "heavy-tail warning; " : "") +
                                 "slopes " + std::to_string(rep.axis_s.fit.slope) + ", " +
                                 std::to_string(rep.axis_t.fit.slope) + " vs " + std::to_string(rep.predicted_slope)});
  }
}

void run_simulate(ArtifactWriter& w, const ExperimentConfig& c, const RunOptions& opt) {
  const std::size_t index = c.n_schedule.size() - 1;
  const double n = c.n_schedule[index];
  const Lattice lattice(c.lattice_m);
  const std::uint64_t seed = mix64(schedule_seed(c.master_seed, index), opt.simulate_replicate);
  const auto theta = realize_theta(theta_at(c, n), lattice, seed);
  const auto zeta = zeta_field(theta);
  const auto xn = build_xn(theta, c.k1, c.k2, c.eval_grid);
  w.stream("theta.csv", [&](std::ostream& out) { write_csv(out, theta.field); });
  w.stream("zeta.csv", [&](std::ostream& out) { write_csv(out, zeta); });
  w.stream("xn.csv", [&](std::ostream& out) { write_csv(out, xn); });
  w.json("xn.json", to_json(xn));
}

void run_kernel_table(ArtifactWriter& w, const ExperimentConfig& c) {
  const Lattice lattice(c.lattice_m);
  const auto nodes = lattice.nodes();
  w.stream("kernel_k1.csv", [&](std::ostream& out) { write_kernel_matrix_csv(out, c.k1, c.eval_grid.s, nodes); });
  w.stream("kernel_k2.csv", [&](std::ostream& out) { write_kernel_matrix_csv(out, c.k2, c.eval_grid.t, nodes); });

  auto identities = [](const KernelSpec& spec, const std::vector<double>& axis) {
    std::vector<double> pts{0.0};
    pts.insert(pts.end(), axis.begin(), axis.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const KernelRowCache cache(spec, pts);
    Json rows = Json::array();
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        Json row{{"s", pts[a]}, {"s_end", pts[b]}, {"increment_l2", cache.increment_l2(a, b)}};
        if (const auto* f = std::get_if<FbmVolterra>(&spec)) {
          const double exact = std::pow(pts[b] - pts[a], 2.0 * f->alpha);
          row["closed_form"] = exact;
          row["relative_error"] = std::abs(row["increment_l2"].get<double>() - exact) / exact;
        } else if (std::holds_alternative<IndicatorKernel>(spec)) {
          row["closed_form"] = pts[b] - pts[a];
        }
        rows.push_back(std::move(row));
      }
    return Json{{"kernel", spec}, {"pairs", rows}};
  };
  w.json("kernel_identities.json", Json{{"k1", identities(c.k1, c.eval_grid.s)}, {"k2", identities(c.k2, c.eval_grid.t)}});
}

Json summary_json(const Command command, const RunResult& result) {
  Json checks = Json::array();
  for (const auto& ck : result.checks)
    checks.push_back(Json{{"name", ck.name}, {"passed", ck.passed}, {"report_only", ck.report_only}, {"detail", ck.detail}});
  return Json{{"command", to_string(command)}, {"all_passed", result.all_passed()}, {"checks", checks}};
}

// Sets obj[path] = value, creating intermediate objects.
void assign_path(Json& root, const std::string& path, Json value) {
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) fail(ErrorCode::ConfigError, "override path '" + path + "' has an empty component");
    if (!node->is_object()) fail(ErrorCode::ConfigError, "override path '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

}  // namespace

std::string_view to_string(Probe p) noexcept {
  for (const auto& [q, s] : kProbeNames)
    if (q == p) return s;
  return "unknown";
}

std::string_view to_string(Command c) noexcept {
  for (const auto& [q, s] : kCommandNames)
    if (q == c) return s;
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (const auto& [c, s] : kCommandNames)
    if (s == name) return c;
  fail(ErrorCode::ConfigError, "unknown subcommand '" + std::string(name) + "'");
}

bool ExperimentConfig::has_probe(Probe p) const { return std::find(probes.begin(), probes.end(), p) != probes.end(); }

bool RunResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.passed; });
}

std::uint64_t schedule_seed(std::uint64_t master_seed, std::size_t index) { return mix64(master_seed, index); }

std::vector<std::pair<StepFunction, StepFunction>> random_step_pairs(std::size_t count, std::uint64_t seed) {
  Engine rng = make_engine(seed);
  std::uniform_int_distribution<int> pieces(1, 4);
  std::uniform_int_distribution<int> slot(1, 15);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  auto draw = [&] {
    StepFunction f;
    const int k = pieces(rng);
    std::vector<int> cuts;
    while (static_cast<int>(cuts.size()) < k - 1) {
      const int c = slot(rng);
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    for (int c : cuts) f.breaks.push_back(c / 16.0);
    for (int i = 0; i < k; ++i) f.values.push_back(value(rng));
    return f;
  };
  std::vector<std::pair<StepFunction, StepFunction>> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto f = draw();
    auto g = draw();
    out.emplace_back(std::move(f), std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig parse_config(const Json& j) {
  constexpr std::string_view ctx = "config";
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  require_known_keys(j,
                     {"schema_version", "theta", "kernels", "lattice_m", "eval_grid", "n_schedule", "replicates",
                      "master_seed", "probes", "h3", "h4", "output_dir"},
                     ctx);
  const int version = require_field<int>(j, "schema_version", ctx);
  if (version != kSchemaVersion)
    fail(ErrorCode::ConfigError, "unsupported schema_version " + std::to_string(version) + " (expected " +
                                     std::to_string(kSchemaVersion) + ")");
  ExperimentConfig c;
  try {
    c.theta = require_field<ThetaSpec>(j, "theta", ctx);
    const Json& kernels = j.at("kernels");
    require_known_keys(kernels, {"k1", "k2", "profile1", "profile2"}, "kernels");
    c.k1 = require_field<KernelSpec>(kernels, "k1", "kernels");
    c.k2 = require_field<KernelSpec>(kernels, "k2", "kernels");
    if (kernels.contains("profile1")) c.profile1 = kernels.at("profile1").get<HypothesisProfile>();
    if (kernels.contains("profile2")) c.profile2 = kernels.at("profile2").get<HypothesisProfile>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  c.lattice_m = require_field<std::size_t>(j, "lattice_m", ctx);
  if (c.lattice_m < 2) fail(ErrorCode::ConfigError, "lattice_m must be >= 2");
  c.eval_grid = require_field<EvalGrid>(j, "eval_grid", ctx);
  c.n_schedule = require_field<std::vector<double>>(j, "n_schedule", ctx);
  if (c.n_schedule.empty()) fail(ErrorCode::ConfigError, "n_schedule must not be empty");
  for (std::size_t k = 0; k < c.n_schedule.size(); ++k) {
    if (!(c.n_schedule[k] > 0.0)) fail(ErrorCode::ConfigError, "n_schedule entries must be > 0");
    if (k > 0 && !(c.n_schedule[k] > c.n_schedule[k - 1]))
      fail(ErrorCode::ConfigError, "n_schedule must be strictly increasing");
  }
  c.replicates = require_field<std::size_t>(j, "replicates", ctx);
  if (c.replicates < 2) fail(ErrorCode::ConfigError, "replicates must be >= 2");
  c.master_seed = require_field<std::uint64_t>(j, "master_seed", ctx);
  for (const auto& name : optional_field<std::vector<std::string>>(j, "probes", {}, ctx)) {
    const Probe p = parse_probe(name);
    if (!c.has_probe(p)) c.probes.push_back(p);
  }
  if (j.contains("h3")) {
    const Json& h = j.at("h3");
    require_known_keys(h, {"pairs", "random_pairs", "replicates", "n", "kac_stroock_constant"}, "h3");
    H3Config cfg;
    if (h.contains("pairs")) {
      for (const auto& p : h.at("pairs")) {
        require_known_keys(p, {"f", "g"}, "h3.pairs");
        cfg.pairs.emplace_back(require_field<StepFunction>(p, "f", "h3.pairs"), require_field<StepFunction>(p, "g", "h3.pairs"));
      }
    }
    cfg.random_pairs = optional_field(h, "random_pairs", cfg.random_pairs, "h3");
    cfg.replicates = optional_field(h, "replicates", cfg.replicates, "h3");
    cfg.n = optional_field(h, "n", cfg.n, "h3");
    cfg.kac_stroock_constant = optional_field(h, "kac_stroock_constant", cfg.kac_stroock_constant, "h3");
    if (cfg.replicates < 2 || !(cfg.n > 0.0)) fail(ErrorCode::ConfigError, "h3: need replicates >= 2 and n > 0");
    c.h3 = std::move(cfg);
  }
  if (j.contains("h4")) {
    Json h = j.at("h4");
    require_known_keys(h, {"setup", "replicates", "n"}, "h4");
    H4Config cfg;
    if (h.contains("setup")) cfg.setup = h.at("setup").get<H4Setup>();
    cfg.replicates = optional_field(h, "replicates", cfg.replicates, "h4");
    cfg.n = optional_field(h, "n", cfg.n, "h4");
    if (cfg.replicates < 2 || !(cfg.n > 0.0)) fail(ErrorCode::ConfigError, "h4: need replicates >= 2 and n > 0");
    c.h4 = cfg;
  }
  c.output_dir = optional_field<std::string>(j, "output_dir", c.output_dir, ctx);

  ThetaSpec probe_spec = c.theta;
  probe_spec.n = c.n_schedule.front();
  validate(probe_spec);
  validate(c.k1);
  validate(c.k2);
  if (c.profile1) validate(*c.profile1);
  if (c.profile2) validate(*c.profile2);
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json kernels{{"k1", c.k1}, {"k2", c.k2}};
  if (c.profile1) kernels["profile1"] = *c.profile1;
  if (c.profile2) kernels["profile2"] = *c.profile2;
  Json probes = Json::array();
  for (Probe p : c.probes) probes.push_back(to_string(p));
  Json j{{"schema_version", kSchemaVersion},
         {"theta", c.theta},
         {"kernels", kernels},
         {"lattice_m", c.lattice_m},
         {"eval_grid", c.eval_grid},
         {"n_schedule", c.n_schedule},
         {"replicates", c.replicates},
         {"master_seed", c.master_seed},
         {"probes", probes},
         {"output_dir", c.output_dir}};
  if (c.h3) {
    Json pairs = Json::array();
    for (const auto& [f, g] : c.h3->pairs) pairs.push_back(Json{{"f", f}, {"g", g}});
    Json h{{"random_pairs", c.h3->random_pairs},
           {"replicates", c.h3->replicates},
           {"n", c.h3->n},
           {"kac_stroock_constant", c.h3->kac_stroock_constant}};
    if (!pairs.empty()) h["pairs"] = pairs;
    j["h3"] = h;
  }
  if (c.h4) j["h4"] = Json{{"setup", c.h4->setup}, {"replicates", c.h4->replicates}, {"n", c.h4->n}};
  return j;
}

std::vector<std::string> preset_names() { return {"brownian-baseline", "fbm-sheet", "fbm-sheet-rough"}; }

Json preset(std::string_view name) {
  const Json uniform4{{"uniform", 4}};
  if (name == "brownian-baseline")
    return Json{{"schema_version", kSchemaVersion},
                {"theta", {{"kind", "KacStroock"}}},
                {"kernels", {{"k1", {{"kind", "Indicator"}}}, {"k2", {{"kind", "Indicator"}}}}},
                {"lattice_m", 256},
                {"eval_grid", uniform4},
                {"n_schedule", Json::array({100})},
                {"replicates", 2000},
                {"master_seed", 20240101},
                {"probes", Json::array({"covariance", "gaussianity"})},
                {"output_dir", "brownian-baseline"}};
  if (name == "fbm-sheet" || name == "fbm-sheet-rough") {
    const double alpha = name == "fbm-sheet" ? 0.6 : 0.4;
    const Json fbm{{"kind", "FbmVolterra"}, {"alpha", alpha}};
    return Json{{"schema_version", kSchemaVersion},
                {"theta", {{"kind", "LevyCos"}, {"theta", 1.0}, {"model", LevyModel::unit_poisson()}, {"m_guard", 2}}},
                {"kernels", {{"k1", fbm}, {"k2", fbm}}},
                {"lattice_m", 256},
                {"eval_grid", uniform4},
                {"n_schedule", Json::array({400})},
                {"replicates", 2000},
                {"master_seed", 20240101},
                {"probes", Json::array({"covariance", "gaussianity", "independence"})},
                {"output_dir", std::string(name)}};
  }
  fail(ErrorCode::ConfigError, "unknown preset '" + std::string(name) + "'");
}

Json apply_overrides(Json raw, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorCode::ConfigError, "override '" + a + "' is not key=value");
    const std::string key = a.substr(0, eq), text = a.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    assign_path(raw, key, std::move(value));
  }
  return raw;
}

// ---------------------------------------------------------------------------

RunResult execute(Command command, const ExperimentConfig& c, const RunOptions& opt) {
  RunResult result;
  ArtifactWriter w(c.output_dir, result);

  w.json("provenance.json", Json{{"tool", "sheetforge"},
                                 {"command", to_string(command)},
                                 {"config", to_json(c)},
                                 {"overrides", opt.overrides},
                                 {"derived", derived_constants(c)},
                                 {"generated_at", timestamp_utc()}});

  const bool cov = c.has_probe(Probe::Covariance), gauss = c.has_probe(Probe::Gaussianity),
             indep = c.has_probe(Probe::Independence);
  switch (command) {
    case Command::Simulate:
      run_simulate(w, c, opt);
      break;
    case Command::KernelTable:
      run_kernel_table(w, c);
      break;
    case Command::Covariance: {
      const std::size_t last = c.n_schedule.size() - 1;
      record_covariance(w, result, c, last, covariance_at(c, last, opt, gauss, indep));
      break;
    }
    case Command::Sweep: {
      Json trend = Json::array();
      std::ostringstream csv;
      csv << "n,max_abs_deviation,max_std_deviation,passed\n";
      for (std::size_t k = 0; k < c.n_schedule.size(); ++k) {
        const auto o = covariance_at(c, k, opt, gauss, indep);
        record_covariance(w, result, c, k, o);
        trend.push_back(Json{{"n", c.n_schedule[k]},
                             {"max_abs_deviation", o.report.max_abs_deviation},
                             {"max_std_deviation", std::isfinite(o.report.max_std_deviation) ? Json(o.report.max_std_deviation) : Json(nullptr)},
                             {"passed", o.report.passes()}});
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g,%d\n", c.n_schedule[k], o.report.max_abs_deviation,
                      o.report.max_std_deviation, o.report.passes() ? 1 : 0);
        csv << buf;
      }
      w.json("trend.json", trend);
      w.text("trend.csv", csv.str());
      break;
    }
    case Command::CheckHypotheses:
      run_hypotheses(w, result, c, opt, true, true, true);
      break;
    case Command::Run:
      if (cov || gauss || indep)
        for (std::size_t k = 0; k < c.n_schedule.size(); ++k)
          record_covariance(w, result, c, k, covariance_at(c, k, opt, gauss, indep));
      run_hypotheses(w, result, c, opt, c.has_probe(Probe::Profiles), c.has_probe(Probe::H3), c.has_probe(Probe::H4));
      break;
  }
  if (!result.checks.empty()) w.json("summary.json", summary_json(command, result));
  return result;
}

}  // namespace sheetforge
