#include "sheetforge/det_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace sheetforge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double polyval(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double interp_table(const LipschitzDiff& k, double x) {
  if (x <= k.x.front()) return k.y.front();
  if (x >= k.x.back()) return k.y.back();
  auto hi = std::upper_bound(k.x.begin(), k.x.end(), x);
  const std::size_t j = static_cast<std::size_t>(hi - k.x.begin());
  const double w = (x - k.x[j - 1]) / (k.x[j] - k.x[j - 1]);
  return k.y[j - 1] + w * (k.y[j] - k.y[j - 1]);
}

double gauss_panel(const auto& f, double a, double b, const GaussRule& rule) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) sum += rule.weights[q] * f(mid + half * rule.nodes[q]);
  return sum * half;
}

double adaptive_panel(const auto& f, double a, double b, double whole, double tol, const GaussRule& rule,
                      int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss_panel(f, a, mid, rule);
  const double right = gauss_panel(f, mid, b, rule);
  const double refined = left + right;
  if (!std::isfinite(refined)) fail(ErrorCode::QuadratureFailure, "non-finite Volterra integrand");
  if (std::abs(refined - whole) <= tol) return refined;
  if (depth <= 0) fail(ErrorCode::QuadratureFailure, "Volterra correction integral did not converge");
  return adaptive_panel(f, a, mid, left, 0.5 * tol, rule, depth - 1) +
         adaptive_panel(f, mid, b, right, 0.5 * tol, rule, depth - 1);
}

// int_r^t (u - r)^(alpha - 3/2) (1 - (r/u)^(1/2 - alpha)) du with u = r + v^2:
// the integrand becomes 2 v^(2 alpha - 2) (1 - (1 + v^2/r)^(alpha - 1/2)),
// bounded near v = 0 for every alpha in (0,1). Panels halve toward v = 0.
double volterra_correction(double alpha, double t, double r) {
  const double c = 0.5 - alpha;
  const double p = 2.0 * alpha - 2.0;
  const double sqrt_r = std::sqrt(r);
  auto f = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double g = -std::expm1(-c * std::log1p(v * v / r));
    return 2.0 * std::pow(v, p) * g;
  };
  const GaussRule& rule = gauss_legendre(10);
  constexpr double kAbsTol = 1e-10;
  constexpr int kMaxLevels = 400;

  double sum = 0.0;
  double hi = std::sqrt(t - r);
  for (int level = 0; level < kMaxLevels; ++level) {
    const double lo = 0.5 * hi;
    const double whole = gauss_panel(f, lo, hi, rule);
    const double tol = std::max(kAbsTol, 1e-13 * std::abs(whole));
    const double piece = adaptive_panel(f, lo, hi, whole, tol, rule, 30);
    sum += piece;
    hi = lo;
    // Below sqrt(r) the integrand behaves like v^(2 alpha), so panel
    // contributions at least halve; the remaining tail is below `piece`.
    if (hi < sqrt_r && std::abs(piece) <= 1e-12 * std::max(1.0, std::abs(sum))) {
      return sum + gauss_panel(f, 0.0, hi, rule);
    }
  }
  fail(ErrorCode::QuadratureFailure, "Volterra correction integral needed too many dyadic levels");
}

double eval_fbm(double alpha, double t, double r) {
  const double d = d_alpha(alpha);
  double value = std::pow(t - r, alpha - 0.5);
  if (alpha != 0.5) value += (0.5 - alpha) * volterra_correction(alpha, t, r);
  return d * value;
}

void check_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::OutOfRange, std::string(what) + " must lie in [0,1]");
}

}  // namespace

std::string kernel_name(const KernelSpec& spec) {
  return std::visit(overloaded{
                        [](const FbmVolterra&) { return std::string("FbmVolterra"); },
                        [](const IndicatorKernel&) { return std::string("Indicator"); },
                        [](const HolmgrenRL&) { return std::string("HolmgrenRL"); },
                        [](const Goursat&) { return std::string("Goursat"); },
                        [](const LipschitzDiff&) { return std::string("LipschitzDiff"); },
                    },
                    spec);
}

void validate(const KernelSpec& spec) {
  std::visit(overloaded{
                 [](const FbmVolterra& k) {
                   if (!(k.alpha > 0.0 && k.alpha < 1.0))
                     fail(ErrorCode::OutOfRange, "FbmVolterra alpha must lie in (0,1)");
                 },
                 [](const IndicatorKernel&) {},
                 [](const HolmgrenRL& k) {
                   if (!(k.hurst > 0.0 && k.hurst < 1.0))
                     fail(ErrorCode::OutOfRange, "HolmgrenRL H must lie in (0,1)");
                 },
                 [](const Goursat& k) {
                   if (k.terms.empty()) fail(ErrorCode::OutOfRange, "Goursat kernel needs at least one term");
                   for (const auto& term : k.terms) {
                     if (term.g.empty() || term.h.empty())
                       fail(ErrorCode::OutOfRange, "Goursat polynomials need at least one coefficient");
                     for (double c : term.g)
                       if (!std::isfinite(c)) fail(ErrorCode::OutOfRange, "Goursat coefficients must be finite");
                     for (double c : term.h)
                       if (!std::isfinite(c)) fail(ErrorCode::OutOfRange, "Goursat coefficients must be finite");
                   }
                 },
                 [](const LipschitzDiff& k) {
                   if (k.x.size() < 2 || k.x.size() != k.y.size())
                     fail(ErrorCode::OutOfRange, "LipschitzDiff table needs >= 2 matching (x, y) entries");
                   for (std::size_t i = 0; i < k.x.size(); ++i) {
                     if (!std::isfinite(k.x[i]) || !std::isfinite(k.y[i]))
                       fail(ErrorCode::OutOfRange, "LipschitzDiff table must be finite");
                     if (i > 0 && !(k.x[i] > k.x[i - 1]))
                       fail(ErrorCode::OutOfRange, "LipschitzDiff table must be strictly sorted");
                   }
                 },
             },
             spec);
}

double d_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::OutOfRange, "d_alpha needs alpha in (0,1)");
  return std::sqrt(2.0 * alpha * std::tgamma(1.5 - alpha) / (std::tgamma(alpha + 0.5) * std::tgamma(2.0 - 2.0 * alpha)));
}

double eval_kernel(const KernelSpec& spec, double t, double r) {
  if (!(r < t)) return 0.0;
  return std::visit(overloaded{
                        [&](const FbmVolterra& k) { return r > 0.0 ? eval_fbm(k.alpha, t, r) : 0.0; },
                        [&](const IndicatorKernel&) { return r > 0.0 ? 1.0 : 0.0; },
                        [&](const HolmgrenRL& k) {
                          if (r < 0.0) return 0.0;
                          return std::sqrt(2.0 * std::numbers::pi) * std::pow(t - r, k.hurst - 0.5);
                        },
                        [&](const Goursat& k) {
                          if (r < 0.0) return 0.0;
                          double sum = 0.0;
                          for (const auto& term : k.terms) sum += polyval(term.g, t) * polyval(term.h, r);
                          return sum;
                        },
                        [&](const LipschitzDiff& k) { return r < 0.0 ? 0.0 : interp_table(k, t - r); },
                    },
                    spec);
}

std::vector<double> kernel_breakpoints(const KernelSpec& spec, double t) {
  std::vector<double> out;
  if (const auto* k = std::get_if<LipschitzDiff>(&spec)) {
    for (double x : k->x)
      if (t - x > 0.0 && t - x < t) out.push_back(t - x);
  }
  return out;
}

std::vector<double> kernel_matrix(const KernelSpec& spec, std::span<const double> points,
                                  std::span<const double> nodes) {
  std::vector<double> out(points.size() * nodes.size());
  for (std::size_t k = 0; k < points.size(); ++k)
    for (std::size_t i = 0; i < nodes.size(); ++i) out[k * nodes.size() + i] = eval_kernel(spec, points[k], nodes[i]);
  return out;
}

QuadratureNodes kernel_quadrature(const KernelSpec& spec, std::span<const double> points, std::size_t quad_points) {
  std::vector<double> breaks(points.begin(), points.end());
  for (double p : points) {
    auto extra = kernel_breakpoints(spec, p);
    breaks.insert(breaks.end(), extra.begin(), extra.end());
  }
  return graded_composite(0.0, 1.0, std::move(breaks), quad_points);
}

double windowed_increment_l2(const KernelSpec& spec, double s, double s_end, double lo, double hi,
                             const QuadratureNodes& rule) {
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double r = rule.nodes[q];
    if (r < lo || r > hi) continue;
    const double diff = eval_kernel(spec, s_end, r) - eval_kernel(spec, s, r);
    sum += rule.weights[q] * diff * diff;
  }
  return sum;
}

double increment_l2(const KernelSpec& spec, double s, double s_end, const QuadratureNodes& rule) {
  return windowed_increment_l2(spec, s, s_end, 0.0, 1.0, rule);
}

double increment_l2(const KernelSpec& spec, double s, double s_end, std::size_t quad_points) {
  validate(spec);
  check_unit(s, "s");
  check_unit(s_end, "s'");
  if (s > s_end) fail(ErrorCode::OutOfRange, "increment_l2 needs s <= s'");
  if (s == s_end) return 0.0;
  const double pts[] = {s, s_end};
  return increment_l2(spec, s, s_end, kernel_quadrature(spec, pts, quad_points));
}

double windowed_increment_l2(const KernelSpec& spec, double s, double s_end, double lo, double hi,
                             std::size_t quad_points) {
  validate(spec);
  check_unit(lo, "window start");
  check_unit(hi, "window end");
  if (s > s_end || lo > hi) fail(ErrorCode::OutOfRange, "windowed_increment_l2 needs ordered arguments");
  if (s == s_end || lo == hi) return 0.0;
  const double pts[] = {s, s_end, lo, hi};
  return windowed_increment_l2(spec, s, s_end, lo, hi, kernel_quadrature(spec, pts, quad_points));
}

double kernel_inner_product(const KernelSpec& spec, double s, double s_end, std::size_t quad_points) {
  validate(spec);
  const double pts[] = {s, s_end};
  const auto rule = kernel_quadrature(spec, pts, quad_points);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    sum += rule.weights[q] * eval_kernel(spec, s, rule.nodes[q]) * eval_kernel(spec, s_end, rule.nodes[q]);
  return sum;
}

std::optional<double> closed_form_inner_product(const KernelSpec& spec, double s, double s_end) {
  if (const auto* k = std::get_if<FbmVolterra>(&spec)) {
    const double h2 = 2.0 * k->alpha;
    return 0.5 * (std::pow(s, h2) + std::pow(s_end, h2) - std::pow(std::abs(s_end - s), h2));
  }
  if (std::holds_alternative<IndicatorKernel>(spec)) return std::min(s, s_end);
  return std::nullopt;
}

// ---------------------------------------------------------------------------

KernelRowCache::KernelRowCache(KernelSpec spec, std::vector<double> points, std::size_t quad_points)
    : spec_(std::move(spec)), points_(std::move(points)) {
  validate(spec_);
  if (!std::is_sorted(points_.begin(), points_.end()))
    fail(ErrorCode::OutOfRange, "KernelRowCache points must be sorted");
  for (double p : points_) check_unit(p, "cache point");
  rule_ = kernel_quadrature(spec_, points_, quad_points);
  rows_ = kernel_matrix(spec_, points_, rule_.nodes);
}

std::span<const double> KernelRowCache::row(std::size_t k) const {
  const std::size_t q = rule_.nodes.size();
  return std::span<const double>(rows_).subspan(k * q, q);
}

double KernelRowCache::windowed_increment_l2(std::size_t k, std::size_t k_end, std::size_t lo_idx,
                                             std::size_t hi_idx) const {
  const double lo = points_.at(lo_idx), hi = points_.at(hi_idx);
  const auto a = row(k), b = row(k_end);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
    const double r = rule_.nodes[q];
    if (r < lo || r > hi) continue;
    const double diff = b[q] - a[q];
    sum += rule_.weights[q] * diff * diff;
  }
  return sum;
}

double KernelRowCache::increment_l2(std::size_t k, std::size_t k_end) const {
  const auto a = row(k), b = row(k_end);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
    const double diff = b[q] - a[q];
    sum += rule_.weights[q] * diff * diff;
  }
  return sum;
}

double KernelRowCache::inner_product(std::size_t k, std::size_t k_end) const {
  const auto a = row(k), b = row(k_end);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule_.nodes.size(); ++q) sum += rule_.weights[q] * a[q] * b[q];
  return sum;
}

// ---------------------------------------------------------------------------

double PowerGauge::operator()(double s) const { return scale * std::pow(s, power); }

void validate(const HypothesisProfile& profile) {
  if (!(profile.gauge.scale > 0.0 && profile.gauge.power > 0.0))
    fail(ErrorCode::ProfileViolation, "gauge G must be increasing (scale > 0, power > 0)");
  if (profile.regime == Regime::H1) {
    if (!(profile.exponent > 1.0))
      fail(ErrorCode::ProfileViolation, "H1 needs exponent alpha_i > 1, got " + std::to_string(profile.exponent));
  } else {
    if (!(profile.exponent > 0.0 && profile.exponent <= 1.0))
      fail(ErrorCode::ProfileViolation, "H1' needs exponent rho_i in (0,1], got " + std::to_string(profile.exponent));
    if (!(profile.m_bound > 0.0 && profile.beta > 0.0))
      fail(ErrorCode::ProfileViolation, "H1' needs M_i > 0 and beta_i > 0");
  }
}

namespace {

// Cumulative windowed integrals of (K(s',.) - K(s,.))^2 at every cache point.
std::vector<double> cumulative_at_points(const KernelRowCache& cache, std::size_t k, std::size_t k_end) {
  const auto& pts = cache.points();
  const auto& rule = cache.rule();
  const auto a = cache.row(k), b = cache.row(k_end);
  std::vector<double> cum(pts.size(), 0.0);
  double running = 0.0;
  std::size_t p = 0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    while (p < pts.size() && pts[p] <= rule.nodes[q]) cum[p++] = running;
    const double diff = b[q] - a[q];
    running += rule.weights[q] * diff * diff;
  }
  while (p < pts.size()) cum[p++] = running;
  return cum;
}

}  // namespace

ProfileReport evaluate_profile(const KernelRowCache& cache, const HypothesisProfile& profile, double rel_tol,
                               double abs_tol) {
  validate(profile);
  ProfileReport report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  report.worst_window_slack = std::numeric_limits<double>::infinity();
  const auto& pts = cache.points();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    for (std::size_t k2 = k + 1; k2 < pts.size(); ++k2) {
      if (!(pts[k2] > pts[k])) continue;
      const double value = cache.increment_l2(k, k2);
      const double bound = std::pow(profile.gauge(pts[k2]) - profile.gauge(pts[k]), profile.exponent);
      const double slack = bound > 0.0 ? (bound - value) / bound : -value;
      ++report.pairs_checked;
      if (slack < report.worst_slack) {
        report.worst_slack = slack;
        report.worst_pair = {pts[k], pts[k2]};
      }
      if (value > bound * (1.0 + rel_tol) + abs_tol) report.passed = false;

      if (profile.regime != Regime::H1Prime) continue;
      const auto cum = cumulative_at_points(cache, k, k2);
      for (std::size_t w = 0; w < pts.size(); ++w) {
        for (std::size_t w2 = w + 1; w2 < pts.size(); ++w2) {
          const double len = pts[w2] - pts[w];
          if (!(len > 0.0)) continue;
          const double wvalue = cum[w2] - cum[w];
          const double wbound = profile.m_bound * std::pow(len, profile.beta);
          const double wslack = (wbound - wvalue) / wbound;
          ++report.windows_checked;
          if (wslack < report.worst_window_slack) {
            report.worst_window_slack = wslack;
            report.worst_window = {pts[w], pts[w2]};
            report.worst_window_pair = {pts[k], pts[k2]};
          }
          if (wvalue > wbound * (1.0 + rel_tol) + abs_tol) report.passed = false;
        }
      }
    }
  }
  if (report.pairs_checked == 0) report.worst_slack = 0.0;
  if (report.windows_checked == 0) report.worst_window_slack = 0.0;
  return report;
}

ProfileReport check_profile(const KernelRowCache& cache, const HypothesisProfile& profile, double rel_tol,
                            double abs_tol) {
  auto report = evaluate_profile(cache, profile, rel_tol, abs_tol);
  if (!report.passed) {
    if (report.worst_slack < -rel_tol)
      fail(ErrorCode::ProfileViolation, "L2 increment bound violated at (s, s') = (" +
                                            std::to_string(report.worst_pair.first) + ", " +
                                            std::to_string(report.worst_pair.second) + ")");
    fail(ErrorCode::ProfileViolation, "windowed bound violated on window [" +
                                          std::to_string(report.worst_window.first) + ", " +
                                          std::to_string(report.worst_window.second) + "] for (s, s') = (" +
                                          std::to_string(report.worst_window_pair.first) + ", " +
                                          std::to_string(report.worst_window_pair.second) + ")");
  }
  return report;
}

namespace {

// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 1.0;
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace

std::pair<double, double> fit_window_bound(const KernelRowCache& cache, double beta) {
  const auto& pts = cache.points();
  // Envelope: largest windowed integral per window length (rounded to grid).
  std::vector<double> lengths, envelope;
  auto record = [&](double len, double value) {
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (std::abs(lengths[i] - len) <= 1e-12) {
        envelope[i] = std::max(envelope[i], value);
        return;
      }
    }
    lengths.push_back(len);
    envelope.push_back(value);
  };
  for (std::size_t k = 0; k < pts.size(); ++k)
    for (std::size_t k2 = k + 1; k2 < pts.size(); ++k2) {
      if (!(pts[k2] > pts[k])) continue;
      const auto cum = cumulative_at_points(cache, k, k2);
      for (std::size_t w = 0; w < pts.size(); ++w)
        for (std::size_t w2 = w + 1; w2 < pts.size(); ++w2)
          if (pts[w2] > pts[w]) record(pts[w2] - pts[w], cum[w2] - cum[w]);
    }
  if (!(beta > 0.0)) beta = std::clamp(loglog_slope(lengths, envelope), 1e-3, 1.0);
  double m = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) m = std::max(m, envelope[i] / std::pow(lengths[i], beta));
  if (!(m > 0.0)) m = std::numeric_limits<double>::min();
  return {m, beta};
}

HypothesisProfile default_profile(const KernelRowCache& cache) {
  HypothesisProfile profile;
  const auto& spec = cache.spec();
  if (const auto* k = std::get_if<FbmVolterra>(&spec)) {
    profile.gauge = {1.0, 1.0};
    profile.exponent = 2.0 * k->alpha;
    if (k->alpha > 0.5) {
      profile.regime = Regime::H1;
    } else {
      profile.regime = Regime::H1Prime;
      std::tie(profile.m_bound, profile.beta) = fit_window_bound(cache, 2.0 * k->alpha);
    }
    return profile;
  }
  if (std::holds_alternative<IndicatorKernel>(spec)) {
    profile.regime = Regime::H1Prime;
    profile.gauge = {1.0, 1.0};
    profile.exponent = 1.0;
    profile.m_bound = 1.0;
    profile.beta = 1.0;
    return profile;
  }
  // Empirical gauge: fit rho from the pair envelope, then the smallest
  // linear-gauge scale making every grid pair satisfy the bound.
  const auto& pts = cache.points();
  std::vector<double> gaps, values;
  for (std::size_t k = 0; k < pts.size(); ++k)
    for (std::size_t k2 = k + 1; k2 < pts.size(); ++k2) {
      if (!(pts[k2] > pts[k])) continue;
      gaps.push_back(pts[k2] - pts[k]);
      values.push_back(cache.increment_l2(k, k2));
    }
  const double rho = std::clamp(loglog_slope(gaps, values), 1e-3, 1.0);
  double ratio = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) ratio = std::max(ratio, values[i] / std::pow(gaps[i], rho));
  profile.regime = Regime::H1Prime;
  profile.exponent = rho;
  profile.gauge = {ratio > 0.0 ? std::pow(ratio, 1.0 / rho) : 1.0, 1.0};
  std::tie(profile.m_bound, profile.beta) = fit_window_bound(cache, 0.0);
  return profile;
}

std::vector<double> uniform_points(std::size_t count) {
  if (count < 2) fail(ErrorCode::OutOfRange, "uniform_points needs count >= 2");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = static_cast<double>(k) / static_cast<double>(count - 1);
  return out;
}

// ---------------------------------------------------------------------------

bool operator==(const GoursatTerm& a, const GoursatTerm& b) { return a.g == b.g && a.h == b.h; }
bool operator==(const Goursat& a, const Goursat& b) { return a.terms == b.terms; }
bool operator==(const LipschitzDiff& a, const LipschitzDiff& b) { return a.x == b.x && a.y == b.y; }

void to_json(Json& j, const KernelSpec& spec) {
  j = std::visit(overloaded{
                     [](const FbmVolterra& k) { return Json{{"kind", "FbmVolterra"}, {"alpha", k.alpha}}; },
                     [](const IndicatorKernel&) { return Json{{"kind", "Indicator"}}; },
                     [](const HolmgrenRL& k) { return Json{{"kind", "HolmgrenRL"}, {"H", k.hurst}}; },
                     [](const Goursat& k) {
                       Json terms = Json::array();
                       for (const auto& t : k.terms) terms.push_back(Json{{"g", t.g}, {"h", t.h}});
                       return Json{{"kind", "Goursat"}, {"terms", terms}};
                     },
                     [](const LipschitzDiff& k) { return Json{{"kind", "LipschitzDiff"}, {"x", k.x}, {"y", k.y}}; },
                 },
                 spec);
}

void from_json(const Json& j, KernelSpec& spec) {
  constexpr std::string_view ctx = "kernel";
  const auto kind = require_field<std::string>(j, "kind", ctx);
  if (kind == "FbmVolterra") {
    require_known_keys(j, {"kind", "alpha"}, ctx);
    spec = FbmVolterra{require_field<double>(j, "alpha", ctx)};
  } else if (kind == "Indicator") {
    require_known_keys(j, {"kind"}, ctx);
    spec = IndicatorKernel{};
  } else if (kind == "HolmgrenRL") {
    require_known_keys(j, {"kind", "H"}, ctx);
    spec = HolmgrenRL{require_field<double>(j, "H", ctx)};
  } else if (kind == "Goursat") {
    require_known_keys(j, {"kind", "terms"}, ctx);
    Goursat g;
    for (const auto& t : require_field<Json>(j, "terms", ctx)) {
      require_known_keys(t, {"g", "h"}, "goursat term");
      g.terms.push_back({require_field<std::vector<double>>(t, "g", "goursat term"),
                         require_field<std::vector<double>>(t, "h", "goursat term")});
    }
    spec = std::move(g);
  } else if (kind == "LipschitzDiff") {
    require_known_keys(j, {"kind", "x", "y"}, ctx);
    spec = LipschitzDiff{require_field<std::vector<double>>(j, "x", ctx), require_field<std::vector<double>>(j, "y", ctx)};
  } else {
    fail(ErrorCode::ConfigError, "kernel: unknown kind '" + kind + "'");
  }
  validate(spec);
}

void to_json(Json& j, const HypothesisProfile& profile) {
  j = Json{{"regime", profile.regime == Regime::H1 ? "H1" : "H1prime"},
           {"G", {{"scale", profile.gauge.scale}, {"power", profile.gauge.power}}},
           {"exponent", profile.exponent}};
  if (profile.regime == Regime::H1Prime) {
    j["M"] = profile.m_bound;
    j["beta"] = profile.beta;
  }
}

void from_json(const Json& j, HypothesisProfile& profile) {
  constexpr std::string_view ctx = "profile";
  require_known_keys(j, {"regime", "G", "exponent", "M", "beta"}, ctx);
  const auto regime = require_field<std::string>(j, "regime", ctx);
  if (regime == "H1") profile.regime = Regime::H1;
  else if (regime == "H1prime") profile.regime = Regime::H1Prime;
  else fail(ErrorCode::ConfigError, "profile: regime must be H1 or H1prime");
  if (j.contains("G")) {
    const Json& g = j.at("G");
    require_known_keys(g, {"scale", "power"}, "profile.G");
    profile.gauge.scale = optional_field<double>(g, "scale", 1.0, "profile.G");
    profile.gauge.power = optional_field<double>(g, "power", 1.0, "profile.G");
  }
  profile.exponent = require_field<double>(j, "exponent", ctx);
  profile.m_bound = optional_field<double>(j, "M", 1.0, ctx);
  profile.beta = optional_field<double>(j, "beta", 1.0, ctx);
}

Json to_json(const ProfileReport& report) {
  return Json{{"passed", report.passed},
              {"worst_relative_slack", report.worst_slack},
              {"worst_pair", {report.worst_pair.first, report.worst_pair.second}},
              {"worst_window_relative_slack", report.worst_window_slack},
              {"worst_window", {report.worst_window.first, report.worst_window.second}},
              {"worst_window_pair", {report.worst_window_pair.first, report.worst_window_pair.second}},
              {"pairs_checked", report.pairs_checked},
              {"windows_checked", report.windows_checked}};
}

void write_kernel_matrix_csv(std::ostream& out, const KernelSpec& spec, std::span<const double> points,
                             std::span<const double> nodes) {
  const auto mat = kernel_matrix(spec, points, nodes);
  char buf[32];
  out << "point";
  for (double r : nodes) {
    std::snprintf(buf, sizeof buf, "%.17g", r);
    out << ',' << buf;
  }
  out << '\n';
  for (std::size_t k = 0; k < points.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", points[k]);
    out << buf;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", mat[k * nodes.size() + i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace sheetforge
