#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sheetforge {

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule with `points` nodes; safe to call concurrently.
const GaussRule& gauss_legendre(std::size_t points);

double integrate_gauss(const std::function<double(double)>& f, double a, double b, const GaussRule& rule);

/// Adaptive bisection on [a,b] comparing the `points`-node rule with the
/// rule on both halves. Throws QuadratureFailure past `max_depth`.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                          std::size_t points = 12, int max_depth = 40);

/// A flat quadrature rule: sum_q weights[q] * f(nodes[q]).
struct QuadratureNodes {
  std::vector<double> nodes;
  std::vector<double> weights;

  double integrate(std::span<const double> values) const;
};

/// Composite Gauss rule over [lo, hi] split at `breakpoints`. Every piece is
/// halved and each half is graded geometrically (ratio `ratio`, `levels`
/// panels) toward its outer endpoint, so integrable algebraic endpoint
/// singularities at any breakpoint converge.
QuadratureNodes graded_composite(double lo, double hi, std::vector<double> breakpoints,
                                 std::size_t points, int levels = 14, double ratio = 0.15);

}  // namespace sheetforge
