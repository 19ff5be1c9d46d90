#include "sheetforge/theta_fields.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sheetforge/sheet_sim.hpp"

namespace sheetforge {

std::string_view to_string(ThetaKind kind) noexcept {
  switch (kind) {
    case ThetaKind::KacStroock: return "KacStroock";
    case ThetaKind::LevyCos: return "LevyCos";
    case ThetaKind::LevySin: return "LevySin";
  }
  return "Unknown";
}

void validate(const ThetaSpec& spec) {
  if (!(spec.n > 0.0) || !std::isfinite(spec.n)) fail(ErrorCode::OutOfRange, "theta spec: n must be > 0");
  if (spec.kind == ThetaKind::KacStroock) {
    validate_parameters(spec.model);
    if (spec.model.sigma != 0.0 || spec.model.drift != 0.0 ||
        !std::holds_alternative<DeterministicJump>(spec.model.jump_dist) ||
        std::get<DeterministicJump>(spec.model.jump_dist).h != 1.0)
      fail(ErrorCode::InvalidModel, "KacStroock needs a unit-jump Poisson model (sigma = drift = 0, h = 1)");
    return;
  }
  validate(spec.model);
  if (!(spec.theta > 0.0 && spec.theta < 2.0 * std::numbers::pi))
    fail(ErrorCode::OutOfRange, "theta must lie in (0, 2 pi)");
  if (!check_angle(spec.model, spec.theta, spec.m_guard))
    fail(ErrorCode::DegenerateAngle, "a(k theta) vanishes for some k <= " + std::to_string(spec.m_guard) +
                                         " at theta = " + std::to_string(spec.theta));
}

double amplitude(const ThetaSpec& spec) {
  if (spec.kind == ThetaKind::KacStroock) return spec.n;
  return spec.n * k_constant(spec.model, spec.theta);
}

namespace {

// n sqrt(x_i y_j) (or n K sqrt(...)) for every node, row-major.
std::vector<double> envelope(const Lattice& lattice, double amp) {
  const std::size_t m = lattice.size();
  const auto nodes = lattice.nodes();
  std::vector<double> out(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = amp * std::sqrt(nodes[i] * nodes[j]);
  return out;
}

}  // namespace

ThetaField realize_theta(const ThetaSpec& spec, const Lattice& lattice, std::uint64_t seed) {
  validate(spec);
  if (spec.kind != ThetaKind::KacStroock) {
    auto pair = realize_theta_pair(spec, lattice, seed);
    return spec.kind == ThetaKind::LevyCos ? std::move(pair.first) : std::move(pair.second);
  }
  const auto sheet = simulate_sheet(spec.model, spec.n, lattice, seed);
  const auto env = envelope(lattice, amplitude(spec));
  ThetaField out{GridField(lattice, Placement::Midpoints), spec, seed};
  out.field.n = spec.n;
  out.field.seed = seed;
  for (std::size_t idx = 0; idx < env.size(); ++idx) {
    const auto count = static_cast<long long>(sheet.field.values[idx]);
    out.field.values[idx] = (count & 1) ? -env[idx] : env[idx];
  }
  return out;
}

std::pair<ThetaField, ThetaField> realize_theta_pair(const ThetaSpec& spec, const Lattice& lattice,
                                                      std::uint64_t seed) {
  ThetaSpec cos_spec = spec, sin_spec = spec;
  cos_spec.kind = ThetaKind::LevyCos;
  sin_spec.kind = ThetaKind::LevySin;
  validate(cos_spec);

  const auto sheet = simulate_sheet(spec.model, spec.n, lattice, seed);
  const auto env = envelope(lattice, amplitude(cos_spec));
  ThetaField c{GridField(lattice, Placement::Midpoints), cos_spec, seed};
  ThetaField s{GridField(lattice, Placement::Midpoints), sin_spec, seed};
  c.field.n = s.field.n = spec.n;
  c.field.seed = s.field.seed = seed;
  for (std::size_t idx = 0; idx < env.size(); ++idx) {
    const double phase = spec.theta * sheet.field.values[idx];
    c.field.values[idx] = env[idx] * std::cos(phase);
    s.field.values[idx] = env[idx] * std::sin(phase);
  }
  return {std::move(c), std::move(s)};
}

GridField zeta_field(const GridField& theta) {
  const std::size_t m = theta.size();
  const double cell = theta.lattice.spacing() * theta.lattice.spacing();
  GridField out(theta.lattice, Placement::CellEdges);
  out.n = theta.n;
  out.seed = theta.seed;
  std::vector<double> row(m);
  for (std::size_t i = 0; i < m; ++i) {
    double running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      running += theta.at(i, j) * cell;
      row[j] = running;
    }
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) = row[j] + (i > 0 ? out.at(i - 1, j) : 0.0);
  }
  return out;
}

GridField zeta_field(const ThetaField& theta) { return zeta_field(theta.field); }

void to_json(Json& j, const ThetaSpec& spec) {
  j = Json{{"kind", to_string(spec.kind)}, {"n", spec.n}, {"model", spec.model}};
  if (spec.kind != ThetaKind::KacStroock) {
    j["theta"] = spec.theta;
    j["m_guard"] = spec.m_guard;
  }
}

void from_json(const Json& j, ThetaSpec& spec) {
  constexpr std::string_view ctx = "theta";
  require_known_keys(j, {"kind", "n", "model", "theta", "m_guard"}, ctx);
  const auto kind = require_field<std::string>(j, "kind", ctx);
  if (kind == "KacStroock") spec.kind = ThetaKind::KacStroock;
  else if (kind == "LevyCos") spec.kind = ThetaKind::LevyCos;
  else if (kind == "LevySin") spec.kind = ThetaKind::LevySin;
  else fail(ErrorCode::ConfigError, "theta: unknown kind '" + kind + "'");
  spec.n = optional_field<double>(j, "n", 1.0, ctx);
  spec.model = j.contains("model") ? j.at("model").get<LevyModel>() : LevyModel::unit_poisson();
  spec.theta = optional_field<double>(j, "theta", spec.kind == ThetaKind::KacStroock ? 0.0 : 1.0, ctx);
  spec.m_guard = optional_field<int>(j, "m_guard", 2, ctx);
}

}  // namespace sheetforge
