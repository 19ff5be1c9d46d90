#include "sheetforge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "sheetforge/errors.hpp"

namespace sheetforge {

namespace {

GaussRule build_rule(std::size_t n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guesses.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double gauss_on(const std::function<double(double)>& f, double a, double b, const GaussRule& rule) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) sum += rule.weights[q] * f(mid + half * rule.nodes[q]);
  return sum * half;
}

double adaptive_step(const std::function<double(double)>& f, double a, double b, double whole, double tol,
                     const GaussRule& rule, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss_on(f, a, mid, rule);
  const double right = gauss_on(f, mid, b, rule);
  const double refined = left + right;
  if (!std::isfinite(refined))
    fail(ErrorCode::QuadratureFailure, "non-finite integrand on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  if (std::abs(refined - whole) <= tol) return refined;
  if (depth <= 0)
    fail(ErrorCode::QuadratureFailure, "adaptive quadrature did not reach tolerance on [" + std::to_string(a) +
                                           ", " + std::to_string(b) + "]");
  return adaptive_step(f, a, mid, left, 0.5 * tol, rule, depth - 1) +
         adaptive_step(f, mid, b, right, 0.5 * tol, rule, depth - 1);
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t points) {
  if (points == 0) fail(ErrorCode::OutOfRange, "Gauss rule needs at least one point");
  static std::mutex mutex;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, build_rule(points)).first;
  return it->second;
}

double integrate_gauss(const std::function<double(double)>& f, double a, double b, const GaussRule& rule) {
  return gauss_on(f, a, b, rule);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                          std::size_t points, int max_depth) {
  if (a == b) return 0.0;
  const GaussRule& rule = gauss_legendre(points);
  return adaptive_step(f, a, b, gauss_on(f, a, b, rule), abs_tol, rule, max_depth);
}

double QuadratureNodes::integrate(std::span<const double> values) const {
  double sum = 0.0;
  for (std::size_t q = 0; q < weights.size(); ++q) sum += weights[q] * values[q];
  return sum;
}

QuadratureNodes graded_composite(double lo, double hi, std::vector<double> breakpoints, std::size_t points,
                                 int levels, double ratio) {
  if (!(lo < hi)) fail(ErrorCode::OutOfRange, "quadrature range must satisfy lo < hi");
  breakpoints.push_back(lo);
  breakpoints.push_back(hi);
  std::erase_if(breakpoints, [&](double x) { return !(x >= lo && x <= hi); });
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

  const GaussRule& rule = gauss_legendre(points);
  QuadratureNodes out;
  auto add_panel = [&](double a, double b) {
    if (!(b > a)) return;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      out.nodes.push_back(mid + half * rule.nodes[q]);
      out.weights.push_back(half * rule.weights[q]);
    }
  };

  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    const double a = breakpoints[p], b = breakpoints[p + 1];
    const double mid = 0.5 * (a + b), width = mid - a;
    // Left half graded toward a, panels listed left to right.
    add_panel(a, a + width * std::pow(ratio, levels));
    for (int k = levels; k >= 1; --k) add_panel(a + width * std::pow(ratio, k), a + width * std::pow(ratio, k - 1));
    // Right half graded toward b.
    for (int k = 0; k < levels; ++k) add_panel(b - width * std::pow(ratio, k), b - width * std::pow(ratio, k + 1));
    add_panel(b - width * std::pow(ratio, levels), b);
  }
  return out;
}

}  // namespace sheetforge
