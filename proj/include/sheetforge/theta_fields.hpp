#pragma once

#include <cstdint>
#include <utility>

#include "sheetforge/grid_field.hpp"
#include "sheetforge/levy_model.hpp"

namespace sheetforge {

enum class ThetaKind { KacStroock, LevyCos, LevySin };

std::string_view to_string(ThetaKind kind) noexcept;

/// Random kernel family with scale n. KacStroock uses a planar Poisson
/// process whose intensity is `model.jump_rate` (1 for the standard
/// kernel; 0 gives the deterministic diagnostic field). LevyCos/LevySin use
/// the full Levy model at angle `theta`, guarded by check_angle(m_guard).
struct ThetaSpec {
  ThetaKind kind = ThetaKind::KacStroock;
  double n = 1.0;
  LevyModel model = LevyModel::unit_poisson();
  double theta = 1.0;
  int m_guard = 2;

  static ThetaSpec kac_stroock(double n) { return ThetaSpec{ThetaKind::KacStroock, n, LevyModel::unit_poisson(), 0.0, 2}; }
  static ThetaSpec levy(ThetaKind kind, double n, LevyModel model, double theta, int m_guard = 2) {
    return ThetaSpec{kind, n, std::move(model), theta, m_guard};
  }

  bool operator==(const ThetaSpec&) const = default;
};

/// Checks ranges and, for the Levy kinds, the nonvanishing condition
/// a(theta) ... a(m_guard theta) != 0 (DegenerateAngle otherwise).
void validate(const ThetaSpec& spec);

/// Multiplier in front of sqrt(xy) cos/sin(...): n K for Levy kinds, n for
/// KacStroock.
double amplitude(const ThetaSpec& spec);

struct ThetaField {
  GridField field;  // midpoint placement
  ThetaSpec spec;
  std::uint64_t seed = 0;
};

/// theta_n at the lattice midpoints from one simulate_sheet draw:
///   KacStroock: n sqrt(xy) (-1)^N(sqrt(n) x, sqrt(n) y)
///   LevyCos:    n K sqrt(xy) cos(theta L(sqrt(n) x, sqrt(n) y))
///   LevySin:    n K sqrt(xy) sin(theta L(sqrt(n) x, sqrt(n) y))
ThetaField realize_theta(const ThetaSpec& spec, const Lattice& lattice, std::uint64_t seed);

/// cos and sin fields built from the same sheet draw. `spec.kind` is ignored.
std::pair<ThetaField, ThetaField> realize_theta_pair(const ThetaSpec& spec, const Lattice& lattice,
                                                      std::uint64_t seed);

/// zeta(s,t) = int_0^t int_0^s theta by the midpoint rule, at the cell edges
/// (i/M, j/M): zeta[i][j] = sum_{i' <= i, j' <= j} theta[i'][j'] / M^2.
GridField zeta_field(const ThetaField& theta);
GridField zeta_field(const GridField& theta);

void to_json(Json& j, const ThetaSpec& spec);
void from_json(const Json& j, ThetaSpec& spec);

}  // namespace sheetforge
