#pragma once

#include <complex>
#include <variant>

#include "sheetforge/json_util.hpp"

namespace sheetforge {

// Jump laws with closed-form characteristic functions.
struct DeterministicJump {
  double h = 1.0;  // nonzero
};

struct TwoPointJump {
  double h_plus = 1.0;
  double h_minus = -1.0;
  double p = 0.5;  // P(J = h_plus)
};

struct GaussianJump {
  double mu = 0.0;
  double tau = 1.0;  // > 0
};

using JumpDist = std::variant<DeterministicJump, TwoPointJump, GaussianJump>;

/// Simulable Levy triplet: Brownian part with coefficient `sigma`, a
/// deterministic drift per unit area, and compound-Poisson jumps with
/// intensity `jump_rate` per unit area. Finite activity, so no compensator:
/// `drift` is the literal mean shift per unit area of the non-jump part.
struct LevyModel {
  double sigma = 0.0;
  double drift = 0.0;
  double jump_rate = 0.0;
  JumpDist jump_dist = DeterministicJump{};

  static LevyModel unit_poisson(double rate = 1.0) {
    return LevyModel{0.0, 0.0, rate, DeterministicJump{1.0}};
  }
  static LevyModel brownian(double sigma = 1.0) { return LevyModel{sigma, 0.0, 0.0, DeterministicJump{}}; }
};

bool operator==(const LevyModel& a, const LevyModel& b);

/// Range checks on every parameter. Degenerate (non-random) models pass.
void validate_parameters(const LevyModel& model);

/// Full validity: parameter ranges plus sigma > 0 or jump_rate > 0.
void validate(const LevyModel& model);

// Psi(xi) = a(xi) + i b(xi), with E[exp(i xi Delta_Q L)] = exp(-area(Q) Psi(xi)).
struct ExponentValue {
  double a = 0.0;
  double b = 0.0;

  std::complex<double> psi() const { return {a, b}; }
};

std::complex<double> jump_characteristic(const JumpDist& dist, double xi);

ExponentValue exponent(const LevyModel& model, double xi);

/// K = (a(theta)^2 + b(theta)^2) / (sqrt(2) a(theta)); throws DegenerateAngle if a(theta) = 0.
double k_constant(const LevyModel& model, double theta);

/// min over k = 1..m of a(k theta); m must be even and >= 2.
double a_star(const LevyModel& model, double theta, int m);

/// True iff a(k theta) > 0 for every k = 1..m.
bool check_angle(const LevyModel& model, double theta, int m);

void to_json(Json& j, const LevyModel& model);
void from_json(const Json& j, LevyModel& model);

}  // namespace sheetforge
