#include "sheetforge/levy_model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sheetforge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// a(2 pi j) for unit jumps evaluates to ~1e-32 rather than 0; values at
// rounding level count as vanishing.
constexpr double kVanishingExponent = 1e-12;

void check_even_guard(int m) {
  if (m < 2 || m % 2 != 0)
    fail(ErrorCode::OutOfRange, "angle guard m must be an even integer >= 2, got " + std::to_string(m));
}

}  // namespace

bool operator==(const LevyModel& a, const LevyModel& b) {
  if (a.sigma != b.sigma || a.drift != b.drift || a.jump_rate != b.jump_rate) return false;
  if (a.jump_dist.index() != b.jump_dist.index()) return false;
  return std::visit(
      overloaded{
          [&](const DeterministicJump& x) { return x.h == std::get<DeterministicJump>(b.jump_dist).h; },
          [&](const TwoPointJump& x) {
            const auto& y = std::get<TwoPointJump>(b.jump_dist);
            return x.h_plus == y.h_plus && x.h_minus == y.h_minus && x.p == y.p;
          },
          [&](const GaussianJump& x) {
            const auto& y = std::get<GaussianJump>(b.jump_dist);
            return x.mu == y.mu && x.tau == y.tau;
          },
      },
      a.jump_dist);
}

void validate_parameters(const LevyModel& model) {
  if (!std::isfinite(model.sigma) || model.sigma < 0.0)
    fail(ErrorCode::InvalidModel, "sigma must be finite and >= 0");
  if (!std::isfinite(model.drift)) fail(ErrorCode::InvalidModel, "drift must be finite");
  if (!std::isfinite(model.jump_rate) || model.jump_rate < 0.0)
    fail(ErrorCode::InvalidModel, "jump_rate must be finite and >= 0");
  std::visit(overloaded{
                 [](const DeterministicJump& d) {
                   if (!std::isfinite(d.h) || d.h == 0.0)
                     fail(ErrorCode::InvalidModel, "deterministic jump size must be finite and nonzero");
                 },
                 [](const TwoPointJump& d) {
                   if (!std::isfinite(d.h_plus) || !std::isfinite(d.h_minus))
                     fail(ErrorCode::InvalidModel, "two-point jump sizes must be finite");
                   if (!(d.p >= 0.0 && d.p <= 1.0))
                     fail(ErrorCode::InvalidModel, "two-point probability must lie in [0,1]");
                 },
                 [](const GaussianJump& d) {
                   if (!std::isfinite(d.mu)) fail(ErrorCode::InvalidModel, "gaussian jump mean must be finite");
                   if (!std::isfinite(d.tau) || d.tau <= 0.0)
                     fail(ErrorCode::InvalidModel, "gaussian jump tau must be > 0");
                 },
             },
             model.jump_dist);
}

void validate(const LevyModel& model) {
  validate_parameters(model);
  if (!(model.sigma > 0.0 || model.jump_rate > 0.0))
    fail(ErrorCode::InvalidModel, "model is deterministic: need sigma > 0 or jump_rate > 0");
}

std::complex<double> jump_characteristic(const JumpDist& dist, double xi) {
  using C = std::complex<double>;
  return std::visit(
      overloaded{
          [&](const DeterministicJump& d) { return std::polar(1.0, xi * d.h); },
          [&](const TwoPointJump& d) {
            return d.p * std::polar(1.0, xi * d.h_plus) + (1.0 - d.p) * std::polar(1.0, xi * d.h_minus);
          },
          [&](const GaussianJump& d) {
            return std::exp(C(-0.5 * d.tau * d.tau * xi * xi, d.mu * xi));
          },
      },
      dist);
}

ExponentValue exponent(const LevyModel& model, double xi) {
  if (xi == 0.0) return {};
  const auto phi = jump_characteristic(model.jump_dist, xi);
  ExponentValue out;
  // 1 - Re(phi) is computed from the closed forms to keep a >= 0 exactly.
  double one_minus_re = std::visit(
      overloaded{
          [&](const DeterministicJump& d) { return 2.0 * std::pow(std::sin(0.5 * xi * d.h), 2); },
          [&](const TwoPointJump& d) {
            return d.p * 2.0 * std::pow(std::sin(0.5 * xi * d.h_plus), 2) +
                   (1.0 - d.p) * 2.0 * std::pow(std::sin(0.5 * xi * d.h_minus), 2);
          },
          [&](const GaussianJump&) { return 1.0 - phi.real(); },
      },
      model.jump_dist);
  out.a = 0.5 * model.sigma * model.sigma * xi * xi + model.jump_rate * one_minus_re;
  out.b = -model.drift * xi - model.jump_rate * phi.imag();
  return out;
}

double k_constant(const LevyModel& model, double theta) {
  const auto e = exponent(model, theta);
  if (!(e.a > kVanishingExponent))
    fail(ErrorCode::DegenerateAngle, "a(theta) = 0 at theta = " + std::to_string(theta));
  return (e.a * e.a + e.b * e.b) / (std::sqrt(2.0) * e.a);
}

double a_star(const LevyModel& model, double theta, int m) {
  check_even_guard(m);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= m; ++k) best = std::min(best, exponent(model, k * theta).a);
  return best;
}

bool check_angle(const LevyModel& model, double theta, int m) {
  check_even_guard(m);
  for (int k = 1; k <= m; ++k) {
    if (!(exponent(model, k * theta).a > kVanishingExponent)) return false;
  }
  return true;
}

void to_json(Json& j, const LevyModel& model) {
  Json dist = std::visit(
      overloaded{
          [](const DeterministicJump& d) { return Json{{"kind", "Deterministic"}, {"h", d.h}}; },
          [](const TwoPointJump& d) {
            return Json{{"kind", "TwoPoint"}, {"h_plus", d.h_plus}, {"h_minus", d.h_minus}, {"p", d.p}};
          },
          [](const GaussianJump& d) { return Json{{"kind", "GaussianJump"}, {"mu", d.mu}, {"tau", d.tau}}; },
      },
      model.jump_dist);
  j = Json{{"sigma", model.sigma}, {"drift", model.drift}, {"jump_rate", model.jump_rate}, {"jump_dist", dist}};
}

void from_json(const Json& j, LevyModel& model) {
  constexpr std::string_view ctx = "levy model";
  require_known_keys(j, {"sigma", "drift", "jump_rate", "jump_dist"}, ctx);
  model.sigma = optional_field<double>(j, "sigma", 0.0, ctx);
  model.drift = optional_field<double>(j, "drift", 0.0, ctx);
  model.jump_rate = optional_field<double>(j, "jump_rate", 0.0, ctx);
  model.jump_dist = DeterministicJump{1.0};
  if (j.contains("jump_dist")) {
    const Json& d = j.at("jump_dist");
    const auto kind = require_field<std::string>(d, "kind", "jump_dist");
    if (kind == "Deterministic") {
      require_known_keys(d, {"kind", "h"}, "jump_dist");
      model.jump_dist = DeterministicJump{require_field<double>(d, "h", "jump_dist")};
    } else if (kind == "TwoPoint") {
      require_known_keys(d, {"kind", "h_plus", "h_minus", "p"}, "jump_dist");
      model.jump_dist = TwoPointJump{require_field<double>(d, "h_plus", "jump_dist"),
                                     require_field<double>(d, "h_minus", "jump_dist"),
                                     require_field<double>(d, "p", "jump_dist")};
    } else if (kind == "GaussianJump") {
      require_known_keys(d, {"kind", "mu", "tau"}, "jump_dist");
      model.jump_dist = GaussianJump{require_field<double>(d, "mu", "jump_dist"),
                                     require_field<double>(d, "tau", "jump_dist")};
    } else {
      fail(ErrorCode::ConfigError, "jump_dist: unknown kind '" + kind + "'");
    }
  }
  validate_parameters(model);
}

}  // namespace sheetforge
