#include "sheetforge/stats_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

#include "sheetforge/parallel.hpp"
#include "sheetforge/rng.hpp"

namespace sheetforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(finite_or_null(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json points_json(std::span<const Point2> points) {
  Json out = Json::array();
  for (const auto& p : points) out.push_back(Json::array({p.s, p.t}));
  return out;
}

// One axis factor of the covariance: int_0^1 K(a,u) K(b,u) du for every pair of coordinates.
Eigen::MatrixXd axis_factor(const KernelSpec& spec, const std::vector<double>& coords, bool force_quadrature,
                            std::size_t quad_points) {
  std::vector<double> unique = coords;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  auto index_of = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(unique.begin(), unique.end(), x) - unique.begin());
  };

  const std::size_t u = unique.size();
  Eigen::MatrixXd table(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u));
  bool closed = !force_quadrature && closed_form_inner_product(spec, 0.5, 0.5).has_value();
  if (closed) {
    for (std::size_t a = 0; a < u; ++a)
      for (std::size_t b = a; b < u; ++b)
        table(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            table(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) =
                *closed_form_inner_product(spec, unique[a], unique[b]);
  } else {
    KernelRowCache cache(spec, unique, quad_points);
    for (std::size_t a = 0; a < u; ++a)
      for (std::size_t b = a; b < u; ++b)
        table(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            table(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = cache.inner_product(a, b);
  }

  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q)
      out(p, q) = table(static_cast<Eigen::Index>(index_of(coords[static_cast<std::size_t>(p)])),
                        static_cast<Eigen::Index>(index_of(coords[static_cast<std::size_t>(q)])));
  return out;
}

void require_replicates(Eigen::Index rows, Eigen::Index needed, const char* what) {
  if (rows < needed)
    fail(ErrorCode::InsufficientReplicates, std::string(what) + " needs at least " + std::to_string(needed) +
                                                " replicates, got " + std::to_string(rows));
}

}  // namespace

MomentEstimate estimate_mean(std::span<const double> samples) {
  if (samples.size() < 2) fail(ErrorCode::InsufficientReplicates, "a moment estimate needs at least 2 replicates");
  const double r = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / r;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return MomentEstimate{mean, std::sqrt(ss / (r - 1.0) / r), samples.size()};
}

std::vector<Point2> grid_points(const EvalGrid& grid) {
  std::vector<Point2> out;
  out.reserve(grid.s.size() * grid.t.size());
  for (double s : grid.s)
    for (double t : grid.t) out.push_back({s, t});
  return out;
}

std::string_view to_string(Centering c) noexcept {
  return c == Centering::ZeroMean ? "zero_mean" : "mean_subtracted";
}

Centering default_centering(ThetaKind kind) noexcept {
  return kind == ThetaKind::KacStroock ? Centering::ZeroMean : Centering::MeanSubtracted;
}

Eigen::MatrixXd theoretical_covariance(const KernelSpec& k1, const KernelSpec& k2, std::span<const Point2> points,
                                       bool force_quadrature, std::size_t quad_points) {
  validate(k1);
  validate(k2);
  std::vector<double> ss, ts;
  for (const auto& p : points) {
    if (!(p.s >= 0.0 && p.s <= 1.0 && p.t >= 0.0 && p.t <= 1.0))
      fail(ErrorCode::OutOfRange, "covariance points must lie in [0,1]^2");
    ss.push_back(p.s);
    ts.push_back(p.t);
  }
  if (points.empty()) return {};
  const Eigen::MatrixXd cov =
      axis_factor(k1, ss, force_quadrature, quad_points).cwiseProduct(axis_factor(k2, ts, force_quadrature, quad_points));
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -1e-8)
    fail(ErrorCode::NumericFailure, "theoretical covariance is not positive semidefinite (min eigenvalue " +
                                        std::to_string(min_eig) + ")");
  return cov;
}

CrossMoments cross_covariance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Centering centering) {
  if (x.rows() != y.rows()) fail(ErrorCode::OutOfRange, "cross covariance: replicate counts differ");
  require_replicates(x.rows(), 2, "covariance estimation");
  const Eigen::Index r = x.rows();
  const double rd = static_cast<double>(r);

  Eigen::MatrixXd xc = x, yc = y;
  if (centering == Centering::MeanSubtracted) {
    xc.rowwise() -= x.colwise().mean();
    yc.rowwise() -= y.colwise().mean();
  }

  CrossMoments out{Eigen::MatrixXd(x.cols(), y.cols()), Eigen::MatrixXd(x.cols(), y.cols())};
  std::vector<double> z(static_cast<std::size_t>(r));
  for (Eigen::Index p = 0; p < x.cols(); ++p) {
    for (Eigen::Index q = 0; q < y.cols(); ++q) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < r; ++k) {
        z[static_cast<std::size_t>(k)] = xc(k, p) * yc(k, q);
        sum += z[static_cast<std::size_t>(k)];
      }
      const double zbar = sum / rd;
      double ss = 0.0;
      for (double v : z) ss += (v - zbar) * (v - zbar);
      if (centering == Centering::ZeroMean || r < 3) {
        out.estimate(p, q) = centering == Centering::ZeroMean ? zbar : sum / (rd - 1.0);
        out.std_error(p, q) = std::sqrt(ss / (rd - 1.0) / rd);
      } else {
        // Leave-one-out estimates are C_{-k} = (sum - z_k R/(R-1)) / (R-2), so the
        // jackknife variance reduces to a scaled spread of z.
        const double scale = rd / ((rd - 1.0) * (rd - 2.0));
        out.estimate(p, q) = sum / (rd - 1.0);
        out.std_error(p, q) = std::sqrt((rd - 1.0) / rd * scale * scale * ss);
      }
    }
  }
  return out;
}

bool CovarianceReport::passes(double se_multiple, double allowance) const {
  if (theoretical.size() == 0) return false;
  for (Eigen::Index i = 0; i < empirical.rows(); ++i)
    for (Eigen::Index j = 0; j < empirical.cols(); ++j)
      if (std::abs(empirical(i, j) - theoretical(i, j)) > std::max(se_multiple * std_error(i, j), allowance))
        return false;
  return true;
}

CovarianceReport empirical_covariance(const Eigen::MatrixXd& samples, std::span<const Point2> points,
                                      Centering centering, const Eigen::MatrixXd& theoretical) {
  if (samples.cols() != static_cast<Eigen::Index>(points.size()))
    fail(ErrorCode::OutOfRange, "empirical covariance: one sample column per point expected");
  auto moments = cross_covariance(samples, samples, centering);
  const Eigen::Index p = samples.cols();
  // Mirror the upper triangle so the matrix is exactly symmetric.
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      moments.estimate(i, j) = moments.estimate(j, i);
      moments.std_error(i, j) = moments.std_error(j, i);
    }

  CovarianceReport rep;
  rep.points.assign(points.begin(), points.end());
  rep.empirical = std::move(moments.estimate);
  rep.std_error = std::move(moments.std_error);
  rep.replicates = static_cast<std::size_t>(samples.rows());
  rep.centering = centering;
  if (theoretical.size() != 0) {
    if (theoretical.rows() != p || theoretical.cols() != p)
      fail(ErrorCode::OutOfRange, "empirical covariance: theoretical matrix has the wrong shape");
    rep.theoretical = theoretical;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) {
        const double dev = std::abs(rep.empirical(i, j) - theoretical(i, j));
        const double se = rep.std_error(i, j);
        const double stdev = se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : kInf);
        if (dev > rep.max_abs_deviation) rep.max_abs_deviation = dev;
        if (stdev > rep.max_std_deviation) {
          rep.max_std_deviation = stdev;
          rep.worst_entry = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
        }
      }
  }
  return rep;
}

std::vector<SampleBlock> sample_operators(const ThetaSpec& spec, const Lattice& lattice,
                                          const std::vector<const SeparableOperator*>& ops, std::size_t replicates,
                                          std::uint64_t master_seed, bool cos_sin_pair, std::size_t workers) {
  validate(spec);
  if (cos_sin_pair && spec.kind == ThetaKind::KacStroock)
    fail(ErrorCode::ConfigError, "a cos/sin pair needs a Levy theta kind");
  const std::size_t per_op = cos_sin_pair ? 2 : 1;
  std::vector<SampleBlock> blocks;
  for (const auto* op : ops) {
    if (!(op->lattice() == lattice)) fail(ErrorCode::OutOfRange, "operator lattice does not match");
    const auto width = static_cast<Eigen::Index>(op->grid().s.size() * op->grid().t.size());
    for (std::size_t k = 0; k < per_op; ++k) {
      const ThetaKind kind = cos_sin_pair ? (k == 0 ? ThetaKind::LevyCos : ThetaKind::LevySin) : spec.kind;
      blocks.push_back(SampleBlock{Eigen::MatrixXd(static_cast<Eigen::Index>(replicates), width), kind, master_seed});
    }
  }

  parallel_for(
      replicates,
      [&](std::size_t r) {
        const std::uint64_t seed = mix64(master_seed, r);
        std::vector<ThetaField> fields;
        if (cos_sin_pair) {
          auto pair = realize_theta_pair(spec, lattice, seed);
          fields.push_back(std::move(pair.first));
          fields.push_back(std::move(pair.second));
        } else {
          fields.push_back(realize_theta(spec, lattice, seed));
        }
        for (std::size_t o = 0; o < ops.size(); ++o)
          for (std::size_t k = 0; k < per_op; ++k) {
            const auto values = ops[o]->apply(fields[k].field);
            auto& block = blocks[o * per_op + k].values;
            for (std::size_t c = 0; c < values.size(); ++c)
              block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[c];
          }
      },
      workers);
  return blocks;
}

// ---------------------------------------------------------------------------

double StepFunction::operator()(double x) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), x) - breaks.begin());
  return values[k];
}

double StepFunction::l2_norm_squared() const {
  double sum = 0.0, left = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double right = k < breaks.size() ? breaks[k] : 1.0;
    sum += values[k] * values[k] * (right - left);
    left = right;
  }
  return sum;
}

void validate(const StepFunction& f) {
  if (f.values.size() != f.breaks.size() + 1)
    fail(ErrorCode::OutOfRange, "step function needs one more value than breaks");
  for (std::size_t k = 0; k < f.breaks.size(); ++k) {
    if (!(f.breaks[k] > 0.0 && f.breaks[k] < 1.0)) fail(ErrorCode::OutOfRange, "step breaks must lie in (0,1)");
    if (k > 0 && !(f.breaks[k] > f.breaks[k - 1])) fail(ErrorCode::OutOfRange, "step breaks must increase");
  }
  for (double v : f.values)
    if (!std::isfinite(v)) fail(ErrorCode::OutOfRange, "step values must be finite");
}

double h3_constant(const ThetaSpec& spec, double kac_stroock_constant) {
  if (spec.kind == ThetaKind::KacStroock) return kac_stroock_constant;
  const double k = k_constant(spec.model, spec.theta);
  const double a = exponent(spec.model, spec.theta).a;
  return 136.0 * k * k / (a * a);
}

std::vector<H3Result> h3_probe(const ThetaSpec& spec, const Lattice& lattice,
                               const std::vector<std::pair<StepFunction, StepFunction>>& pairs,
                               std::size_t replicates, std::uint64_t master_seed, double kac_stroock_constant,
                               double se_multiple, std::size_t workers) {
  validate(spec);
  if (pairs.empty()) return {};
  const std::size_t count = pairs.size();
  const auto m = static_cast<Eigen::Index>(lattice.size());
  const auto nodes = lattice.nodes();
  RowMatrix left(static_cast<Eigen::Index>(count), m), right(static_cast<Eigen::Index>(count), m);
  for (std::size_t k = 0; k < count; ++k) {
    validate(pairs[k].first);
    validate(pairs[k].second);
    for (Eigen::Index i = 0; i < m; ++i) {
      left(static_cast<Eigen::Index>(k), i) = pairs[k].first(nodes[static_cast<std::size_t>(i)]) * lattice.spacing();
      right(static_cast<Eigen::Index>(k), i) = pairs[k].second(nodes[static_cast<std::size_t>(i)]) * lattice.spacing();
    }
  }
  EvalGrid labels;
  for (std::size_t k = 0; k < count; ++k) labels.s.push_back(static_cast<double>(k + 1) / static_cast<double>(count));
  labels.t = labels.s;
  const SeparableOperator op(std::move(left), std::move(right), lattice, labels, IndicatorKernel{}, IndicatorKernel{});
  const auto blocks = sample_operators(spec, lattice, {&op}, replicates, master_seed, false, workers);
  const auto& values = blocks.front().values;

  const double c = h3_constant(spec, kac_stroock_constant);
  std::vector<H3Result> out;
  std::vector<double> squares(replicates);
  for (std::size_t k = 0; k < count; ++k) {
    const auto col = static_cast<Eigen::Index>(k * count + k);
    for (std::size_t r = 0; r < replicates; ++r) {
      const double v = values(static_cast<Eigen::Index>(r), col);
      squares[r] = v * v;
    }
    H3Result res;
    res.second_moment = estimate_mean(squares);
    res.bound_constant = c;
    res.norm_product = pairs[k].first.l2_norm_squared() * pairs[k].second.l2_norm_squared();
    const double denom = c * res.norm_product;
    res.ratio = denom > 0.0 ? MomentEstimate{res.second_moment.value / denom, res.second_moment.std_error / denom, replicates}
                            : MomentEstimate{0.0, 0.0, replicates};
    res.report_only = spec.kind == ThetaKind::KacStroock;
    res.passed = res.report_only || res.ratio.value + se_multiple * res.ratio.std_error <= 1.0;
    out.push_back(res);
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate(const H4Setup& su) {
  if (su.m < 2 || su.m % 2 != 0) fail(ErrorCode::OutOfRange, "H4 moment order m must be even and >= 2");
  if (!(0.0 <= su.s && su.s < su.s_end && su.s_end <= 1.0 && 0.0 <= su.t && su.t < su.t_end && su.t_end <= 1.0))
    fail(ErrorCode::OutOfRange, "H4 kernel increment needs 0 <= s < s' <= 1 and 0 <= t < t' <= 1");
  if (!(su.ratio > 0.0 && su.ratio < 1.0)) fail(ErrorCode::OutOfRange, "H4 window ratio must lie in (0,1)");
  if (su.levels < 3) fail(ErrorCode::OutOfRange, "H4 needs at least 3 window levels");
  if (!(su.base_width > 0.0 && su.s0 > 0.0 && su.t0 > 0.0 && su.base_width < su.s0 && su.base_width < su.t0 &&
        su.s0 + su.base_width <= 1.0 && su.t0 + su.base_width <= 1.0))
    fail(ErrorCode::OutOfRange, "H4 windows need 0 < s0 < s0' < min(2 s0, 1) on both axes");
}

SlopeFit weighted_slope(std::span<const double> x, std::span<const double> y, std::span<const double> var,
                        double level) {
  if (x.size() != y.size() || x.size() != var.size() || x.size() < 2)
    fail(ErrorCode::OutOfRange, "slope fit needs matching inputs with at least 2 points");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(var[k] > 0.0) || !std::isfinite(var[k])) fail(ErrorCode::NumericFailure, "slope fit: nonpositive variance");
    const double w = 1.0 / var[k];
    sw += w;
    sx += w * x[k];
    sy += w * y[k];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = 1.0 / var[k];
    sxx += w * (x[k] - xbar) * (x[k] - xbar);
    sxy += w * (x[k] - xbar) * (y[k] - ybar);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::NumericFailure, "slope fit: x values are all equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.std_error = std::sqrt(1.0 / sxx);
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  fit.ci_low = fit.slope - z * fit.std_error;
  fit.ci_high = fit.slope + z * fit.std_error;
  return fit;
}

H4Report h4_probe(const ThetaSpec& spec, const KernelSpec& k1, const KernelSpec& k2, double beta_1, double beta_2,
                  const H4Setup& setup, const Lattice& lattice, std::size_t replicates, std::uint64_t master_seed,
                  std::size_t workers) {
  validate(spec);
  validate(setup);
  if (!(beta_1 > 0.0 && beta_2 > 0.0)) fail(ErrorCode::OutOfRange, "H4 needs positive window exponents beta");
  require_replicates(static_cast<Eigen::Index>(replicates), 2, "the H4 probe");

  // Widths in ascending order so they double as grid labels.
  std::vector<double> widths(setup.levels);
  for (std::size_t k = 0; k < setup.levels; ++k)
    widths[setup.levels - 1 - k] = setup.base_width * std::pow(setup.ratio, static_cast<double>(k));
  if (widths.front() * static_cast<double>(lattice.size()) < 1.0)
    fail(ErrorCode::OutOfRange, "H4 smallest window is narrower than a lattice cell");

  const auto nodes = lattice.nodes();
  const auto m = static_cast<Eigen::Index>(lattice.size());
  auto rows = [&](const KernelSpec& spec_k, double a, double b, double corner) {
    const std::vector<double> ends{a, b};
    const auto raw = kernel_matrix(spec_k, ends, nodes);
    RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(widths.size()), m);
    for (std::size_t k = 0; k < widths.size(); ++k)
      for (Eigen::Index i = 0; i < m; ++i) {
        const double u = nodes[static_cast<std::size_t>(i)];
        if (u > corner && u <= corner + widths[k] + 1e-12)
          out(static_cast<Eigen::Index>(k), i) = (raw[nodes.size() + static_cast<std::size_t>(i)] -
                                                  raw[static_cast<std::size_t>(i)]) * lattice.spacing();
      }
    return out;
  };
  const SeparableOperator op(rows(k1, setup.s, setup.s_end, setup.s0), rows(k2, setup.t, setup.t_end, setup.t0),
                             lattice, EvalGrid{widths, widths}, k1, k2);
  const auto block = sample_operators(spec, lattice, {&op}, replicates, master_seed, false, workers).front().values;

  H4Report rep;
  rep.setup = setup;
  rep.gamma = 0.25 * std::min(beta_1, beta_2);
  rep.predicted_slope = setup.m * rep.gamma;
  const std::size_t last = widths.size() - 1;
  auto sweep = [&](bool along_s) {
    H4AxisReport axis;
    axis.widths = widths;
    std::vector<double> powered(replicates), lx, ly, lv;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::size_t col = along_s ? k * widths.size() + last : last * widths.size() + k;
      for (std::size_t r = 0; r < replicates; ++r)
        powered[r] = std::pow(block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)), setup.m);
      const auto est = estimate_mean(powered);
      axis.moments.push_back(est);
      if (est.value > 0.0) {
        const double rel = est.std_error / est.value;
        if (rel > 0.5) rep.heavy_tail_warning = true;
        lx.push_back(std::log(widths[k]));
        ly.push_back(std::log(est.value));
        lv.push_back(std::max(rel * rel, 1e-300));
      }
    }
    if (lx.size() < 2) fail(ErrorCode::NumericFailure, "H4 moments vanish on all but one window");
    axis.fit = weighted_slope(lx, ly, lv);
    axis.gamma_hat = axis.fit.slope / setup.m;
    return axis;
  };
  rep.axis_s = sweep(true);
  rep.axis_t = sweep(false);
  rep.consistent = rep.axis_s.fit.ci_high >= rep.predicted_slope && rep.axis_t.fit.ci_high >= rep.predicted_slope;
  return rep;
}

// ---------------------------------------------------------------------------

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Small-lambda form: 1 - sqrt(2 pi)/lambda sum exp(-(2k-1)^2 pi^2 / (8 lambda^2)).
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) sum += std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * c);
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult gaussianity_test(std::span<const double> samples, double variance, Centering centering) {
  if (samples.size() < 500)
    fail(ErrorCode::InsufficientReplicates, "gaussianity test needs at least 500 samples, got " +
                                                std::to_string(samples.size()));
  if (!(variance > 0.0)) fail(ErrorCode::OutOfRange, "gaussianity test needs a positive reference variance");
  std::vector<double> sorted(samples.begin(), samples.end());
  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= static_cast<double>(sorted.size());
  if (centering == Centering::MeanSubtracted)
    for (double& x : sorted) x -= mean;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = 0.5 * std::erfc(-sorted[i] / (sd * std::numbers::sqrt2));
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return KsResult{d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d), sorted.size(), mean, centering};
}

IndependenceReport independence_probe(const SampleBlock& first, const SampleBlock& second,
                                      std::span<const Point2> points, Centering centering, double se_multiple) {
  if (first.master_seed != second.master_seed)
    fail(ErrorCode::UncoupledInputs, "independence probe needs fields from the same sheet draws (master seeds differ)");
  if (first.values.cols() != static_cast<Eigen::Index>(points.size()) ||
      second.values.cols() != static_cast<Eigen::Index>(points.size()))
    fail(ErrorCode::OutOfRange, "independence probe: one sample column per point expected");
  auto moments = cross_covariance(first.values, second.values, centering);
  IndependenceReport rep;
  rep.points.assign(points.begin(), points.end());
  for (Eigen::Index i = 0; i < moments.estimate.rows(); ++i)
    for (Eigen::Index j = 0; j < moments.estimate.cols(); ++j) {
      const double dev = std::abs(moments.estimate(i, j));
      const double se = moments.std_error(i, j);
      const double z = se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : kInf);
      rep.max_std_deviation = std::max(rep.max_std_deviation, z);
      if (z > se_multiple) rep.passed = false;
    }
  rep.cross = std::move(moments.estimate);
  rep.std_error = std::move(moments.std_error);
  return rep;
}

// ---------------------------------------------------------------------------

Json to_json(const MomentEstimate& m) {
  return Json{{"value", finite_or_null(m.value)}, {"std_error", finite_or_null(m.std_error)}, {"replicates", m.replicates}};
}

Json to_json(const CovarianceReport& r) {
  Json j{{"points", points_json(r.points)},
         {"replicates", r.replicates},
         {"centering", to_string(r.centering)},
         {"empirical", matrix_json(r.empirical)},
         {"std_error", matrix_json(r.std_error)}};
  if (r.theoretical.size() != 0) {
    j["theoretical"] = matrix_json(r.theoretical);
    j["max_abs_deviation"] = r.max_abs_deviation;
    j["max_std_deviation"] = finite_or_null(r.max_std_deviation);
    j["worst_entry"] = Json::array({r.worst_entry.first, r.worst_entry.second});
    j["passes_5se_or_0.05"] = r.passes();
  }
  return j;
}

Json to_json(const H3Result& r) {
  return Json{{"second_moment", to_json(r.second_moment)},
              {"bound_constant", r.bound_constant},
              {"norm_product", r.norm_product},
              {"ratio", to_json(r.ratio)},
              {"report_only", r.report_only},
              {"passed", r.passed}};
}

namespace {

Json axis_json(const H4AxisReport& a) {
  Json moments = Json::array();
  for (const auto& m : a.moments) moments.push_back(to_json(m));
  return Json{{"widths", a.widths},
              {"moments", moments},
              {"slope", a.fit.slope},
              {"slope_std_error", a.fit.std_error},
              {"slope_ci", Json::array({a.fit.ci_low, a.fit.ci_high})},
              {"gamma_hat", a.gamma_hat}};
}

}  // namespace

Json to_json(const H4Report& r) {
  return Json{{"setup", r.setup},
              {"gamma", r.gamma},
              {"predicted_slope", r.predicted_slope},
              {"axis_s", axis_json(r.axis_s)},
              {"axis_t", axis_json(r.axis_t)},
              {"heavy_tail_warning", r.heavy_tail_warning},
              {"consistent", r.consistent}};
}

Json to_json(const KsResult& r) {
  return Json{{"statistic", r.statistic},
              {"p_value", r.p_value},
              {"samples", r.samples},
              {"sample_mean", r.sample_mean},
              {"centering", to_string(r.centering)}};
}

Json to_json(const IndependenceReport& r) {
  return Json{{"points", points_json(r.points)},
              {"cross_covariance", matrix_json(r.cross)},
              {"std_error", matrix_json(r.std_error)},
              {"max_std_deviation", finite_or_null(r.max_std_deviation)},
              {"passed", r.passed}};
}

void to_json(Json& j, const StepFunction& f) { j = Json{{"breaks", f.breaks}, {"values", f.values}}; }

void from_json(const Json& j, StepFunction& f) {
  constexpr std::string_view ctx = "step function";
  require_known_keys(j, {"breaks", "values"}, ctx);
  f.breaks = optional_field<std::vector<double>>(j, "breaks", {}, ctx);
  f.values = require_field<std::vector<double>>(j, "values", ctx);
  validate(f);
}

void to_json(Json& j, const H4Setup& s) {
  j = Json{{"s", s.s},   {"s_end", s.s_end}, {"t", s.t}, {"t_end", s.t_end}, {"s0", s.s0}, {"t0", s.t0},
           {"base_width", s.base_width}, {"ratio", s.ratio}, {"levels", s.levels}, {"m", s.m}};
}

void from_json(const Json& j, H4Setup& s) {
  constexpr std::string_view ctx = "h4";
  require_known_keys(j, {"s", "s_end", "t", "t_end", "s0", "t0", "base_width", "ratio", "levels", "m"}, ctx);
  const H4Setup d;
  s.s = optional_field(j, "s", d.s, ctx);
  s.s_end = optional_field(j, "s_end", d.s_end, ctx);
  s.t = optional_field(j, "t", d.t, ctx);
  s.t_end = optional_field(j, "t_end", d.t_end, ctx);
  s.s0 = optional_field(j, "s0", d.s0, ctx);
  s.t0 = optional_field(j, "t0", d.t0, ctx);
  s.base_width = optional_field(j, "base_width", d.base_width, ctx);
  s.ratio = optional_field(j, "ratio", d.ratio, ctx);
  s.levels = optional_field(j, "levels", d.levels, ctx);
  s.m = optional_field(j, "m", d.m, ctx);
  validate(s);
}

void write_text(std::ostream& out, const CovarianceReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "replicates=%zu centering=%s\n", r.replicates, std::string(to_string(r.centering)).c_str());
  out << buf;
  std::snprintf(buf, sizeof buf, "%-17s %-17s %12s %12s %12s %8s\n", "point_i", "point_j", "empirical", "theory",
                "std_error", "z");
  out << buf;
  const bool theory = r.theoretical.size() != 0;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (std::size_t j = i; j < r.points.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const double th = theory ? r.theoretical(ii, jj) : std::nan("");
      const double se = r.std_error(ii, jj);
      const double z = theory && se > 0.0 ? (r.empirical(ii, jj) - th) / se : std::nan("");
      char pi[32], pj[32];
      std::snprintf(pi, sizeof pi, "(%.4f,%.4f)", r.points[i].s, r.points[i].t);
      std::snprintf(pj, sizeof pj, "(%.4f,%.4f)", r.points[j].s, r.points[j].t);
      std::snprintf(buf, sizeof buf, "%-17s %-17s %12.6f %12.6f %12.6f %8.3f\n", pi, pj, r.empirical(ii, jj), th, se, z);
      out << buf;
    }
  if (theory) {
    std::snprintf(buf, sizeof buf, "max_abs_deviation=%.6g max_std_deviation=%.4g pass=%s\n", r.max_abs_deviation,
                  r.max_std_deviation, r.passes() ? "yes" : "no");
    out << buf;
  }
}

void write_csv(std::ostream& out, const CovarianceReport& r) {
  out << "i,j,s_i,t_i,s_j,t_j,empirical,std_error,theoretical\n";
  char buf[256];
  const bool theory = r.theoretical.size() != 0;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (std::size_t j = 0; j < r.points.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,", i, j, r.points[i].s, r.points[i].t,
                    r.points[j].s, r.points[j].t, r.empirical(ii, jj), r.std_error(ii, jj));
      out << buf;
      if (theory) {
        std::snprintf(buf, sizeof buf, "%.17g", r.theoretical(ii, jj));
        out << buf;
      }
      out << '\n';
    }
}

}  // namespace sheetforge
