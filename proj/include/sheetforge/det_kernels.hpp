#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sheetforge/json_util.hpp"
#include "sheetforge/quadrature.hpp"

namespace sheetforge {

// Deterministic kernel families K(t, r), all supported on 0 <= r < t.

/// Volterra kernel of fractional Brownian motion with Hurst index alpha.
struct FbmVolterra {
  double alpha = 0.5;
};

/// K(t, r) = 1 on (0, t).
struct IndicatorKernel {};

/// Holmgren-Riemann-Liouville: K(t, r) = sqrt(2 pi) (t - r)^(H - 1/2).
struct HolmgrenRL {
  double hurst = 0.5;
};

/// One term g(t) h(r) of a Goursat kernel; polynomial coefficients in
/// ascending powers.
struct GoursatTerm {
  std::vector<double> g;
  std::vector<double> h;
};

/// K(t, r) = sum_i g_i(t) h_i(r) on [0, t).
struct Goursat {
  std::vector<GoursatTerm> terms;
};

/// K(t, r) = h(t - r), h piecewise linear through (x[k], y[k]), held
/// constant outside the table.
struct LipschitzDiff {
  std::vector<double> x;
  std::vector<double> y;
};

using KernelSpec = std::variant<FbmVolterra, IndicatorKernel, HolmgrenRL, Goursat, LipschitzDiff>;

std::string kernel_name(const KernelSpec& spec);
void validate(const KernelSpec& spec);

/// d_alpha = (2 alpha Gamma(3/2 - alpha) / (Gamma(alpha + 1/2) Gamma(2 - 2 alpha)))^(1/2).
double d_alpha(double alpha);

/// Evaluates K(t, r). The fBm correction integral is computed after the
/// substitution u = r + v^2 on dyadic panels toward v = 0 to absolute error
/// 1e-8; failure raises QuadratureFailure.
double eval_kernel(const KernelSpec& spec, double t, double r);

/// Points in r where K(t, .) is not smooth (besides 0 and t).
std::vector<double> kernel_breakpoints(const KernelSpec& spec, double t);

/// Row-major |points| x |nodes| matrix of K(points[k], nodes[i]).
std::vector<double> kernel_matrix(const KernelSpec& spec, std::span<const double> points,
                                  std::span<const double> nodes);

/// Graded Gauss quadrature on [0,1] with breakpoints at `points` (and the
/// kernel's own kinks at those points).
QuadratureNodes kernel_quadrature(const KernelSpec& spec, std::span<const double> points,
                                  std::size_t quad_points);

/// int_lo^hi (K(s', r) - K(s, r))^2 dr on an explicit rule.
double windowed_increment_l2(const KernelSpec& spec, double s, double s_end, double lo, double hi,
                             const QuadratureNodes& rule);

/// int_0^1 (K(s', r) - K(s, r))^2 dr with breakpoints {0, s, s', 1}.
double increment_l2(const KernelSpec& spec, double s, double s_end, std::size_t quad_points = 10);
double increment_l2(const KernelSpec& spec, double s, double s_end, const QuadratureNodes& rule);

/// int_lo^hi (K(s', r) - K(s, r))^2 dr with breakpoints {0, lo, hi, s, s', 1}.
double windowed_increment_l2(const KernelSpec& spec, double s, double s_end, double lo, double hi,
                             std::size_t quad_points = 10);

/// int_0^1 K(s, u) K(s', u) du by graded quadrature.
double kernel_inner_product(const KernelSpec& spec, double s, double s_end, std::size_t quad_points = 10);

/// Closed form of int_0^1 K(s,u) K(s',u) du where one exists (fBm, indicator).
std::optional<double> closed_form_inner_product(const KernelSpec& spec, double s, double s_end);

/// Kernel rows K(points[k], .) cached on a shared graded rule, so every
/// pairwise L2 quantity over the point set costs one pass over the nodes.
/// Immutable after construction.
class KernelRowCache {
 public:
  KernelRowCache(KernelSpec spec, std::vector<double> points, std::size_t quad_points = 10);

  const KernelSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& points() const noexcept { return points_; }
  const QuadratureNodes& rule() const noexcept { return rule_; }
  std::span<const double> row(std::size_t k) const;

  double increment_l2(std::size_t k, std::size_t k_end) const;
  /// Window given by point indices lo_idx <= hi_idx.
  double windowed_increment_l2(std::size_t k, std::size_t k_end, std::size_t lo_idx, std::size_t hi_idx) const;
  double inner_product(std::size_t k, std::size_t k_end) const;

 private:
  KernelSpec spec_;
  std::vector<double> points_;
  QuadratureNodes rule_;
  std::vector<double> rows_;  // points x nodes
};

// ---------------------------------------------------------------------------
// Hypothesis profiles (H1) / (H1').

enum class Regime { H1, H1Prime };

/// Increasing gauge G(s) = scale * s^power.
struct PowerGauge {
  double scale = 1.0;
  double power = 1.0;

  double operator()(double s) const;
};

struct HypothesisProfile {
  Regime regime = Regime::H1Prime;
  PowerGauge gauge;
  double exponent = 1.0;  // alpha_i (> 1) under H1, rho_i in (0, 1] under H1'
  double m_bound = 1.0;   // M_i, H1' only
  double beta = 1.0;      // beta_i, H1' only
};

/// Throws ProfileViolation when a parameter is outside its regime's range.
void validate(const HypothesisProfile& profile);

struct ProfileReport {
  bool passed = true;
  double worst_slack = 0.0;           // min over pairs of bound - value (relative to bound)
  std::pair<double, double> worst_pair{0.0, 0.0};
  double worst_window_slack = 0.0;    // same for the windowed bound (H1' only)
  std::pair<double, double> worst_window{0.0, 0.0};
  std::pair<double, double> worst_window_pair{0.0, 0.0};
  std::size_t pairs_checked = 0;
  std::size_t windows_checked = 0;
};

/// Evaluates the profile on every ordered pair s < s' of the cache's points
/// and, for H1', on every window [s0, s0'] drawn from the same points. A
/// bound counts as met when value <= bound * (1 + rel_tol) + abs_tol.
ProfileReport evaluate_profile(const KernelRowCache& cache, const HypothesisProfile& profile,
                               double rel_tol = 2e-3, double abs_tol = 1e-12);

/// As evaluate_profile but throws ProfileViolation naming the offending pair.
ProfileReport check_profile(const KernelRowCache& cache, const HypothesisProfile& profile,
                            double rel_tol = 2e-3, double abs_tol = 1e-12);

/// Profile for a kernel family: fBm uses G(s) = s with exponent 2 alpha
/// (H1 iff alpha > 1/2); indicator is H1' with rho = M = beta = 1; other
/// families get empirically fitted gauges and window bounds on the cache's
/// point grid.
HypothesisProfile default_profile(const KernelRowCache& cache);

/// Fits the smallest (M, beta) window bound consistent with the grid for a
/// fixed beta; when beta <= 0 the exponent is regressed from the envelope.
std::pair<double, double> fit_window_bound(const KernelRowCache& cache, double beta = 0.0);

/// Uniform point grid k/(count-1), k = 0..count-1.
std::vector<double> uniform_points(std::size_t count);

void to_json(Json& j, const KernelSpec& spec);
void from_json(const Json& j, KernelSpec& spec);
void to_json(Json& j, const HypothesisProfile& profile);
void from_json(const Json& j, HypothesisProfile& profile);
Json to_json(const ProfileReport& report);

bool operator==(const GoursatTerm& a, const GoursatTerm& b);
bool operator==(const Goursat& a, const Goursat& b);
bool operator==(const LipschitzDiff& a, const LipschitzDiff& b);
inline bool operator==(const FbmVolterra& a, const FbmVolterra& b) { return a.alpha == b.alpha; }
inline bool operator==(const IndicatorKernel&, const IndicatorKernel&) { return true; }
inline bool operator==(const HolmgrenRL& a, const HolmgrenRL& b) { return a.hurst == b.hurst; }

/// CSV dump of kernel_matrix with point/node headers.
void write_kernel_matrix_csv(std::ostream& out, const KernelSpec& spec, std::span<const double> points,
                             std::span<const double> nodes);

}  // namespace sheetforge
