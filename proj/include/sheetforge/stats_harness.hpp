#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sheetforge/det_kernels.hpp"
#include "sheetforge/theta_fields.hpp"
#include "sheetforge/weak_approx.hpp"

namespace sheetforge {

/// Monte Carlo mean with std_error = sample sd / sqrt(replicates).
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t replicates = 0;
};

MomentEstimate estimate_mean(std::span<const double> samples);

struct Point2 {
  double s = 0.0;
  double t = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Cartesian product of the grid axes, s-major (matches ApproxField::values).
std::vector<Point2> grid_points(const EvalGrid& grid);

enum class Centering { ZeroMean, MeanSubtracted };

std::string_view to_string(Centering c) noexcept;

/// Mean-subtracted for the cos/sin kernels (their mean is not zero by
/// symmetry), zero-mean for KacStroock.
Centering default_centering(ThetaKind kind) noexcept;

/// prod_i int_0^1 K_i(s_i, u) K_i(s_i', u) du over all point pairs. Uses the
/// closed forms (fBm, indicator) unless `force_quadrature`. Throws
/// NumericFailure if the smallest eigenvalue is below -1e-8.
Eigen::MatrixXd theoretical_covariance(const KernelSpec& k1, const KernelSpec& k2, std::span<const Point2> points,
                                       bool force_quadrature = false, std::size_t quad_points = 10);

/// Cross-covariance of the columns of x (replicates x P) with those of y
/// (replicates x Q). Zero-mean: mean of products, SE = sd / sqrt(R).
/// Mean-subtracted: unbiased estimator with jackknife standard errors.
struct CrossMoments {
  Eigen::MatrixXd estimate;
  Eigen::MatrixXd std_error;
};

CrossMoments cross_covariance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Centering centering);

struct CovarianceReport {
  std::vector<Point2> points;
  Eigen::MatrixXd empirical;
  Eigen::MatrixXd std_error;
  Eigen::MatrixXd theoretical;  // empty when no theory was supplied
  std::size_t replicates = 0;
  Centering centering = Centering::ZeroMean;
  double max_abs_deviation = 0.0;
  double max_std_deviation = 0.0;  // |emp - theory| / SE; inf when SE = 0 and they differ
  std::pair<std::size_t, std::size_t> worst_entry{0, 0};

  /// Every entry within max(se_multiple * SE, allowance) of the theory.
  bool passes(double se_multiple = 5.0, double allowance = 0.05) const;
};

/// Symmetric sample covariance across replicates (rows of `samples`, one
/// column per point). Throws InsufficientReplicates for fewer than 2 rows.
CovarianceReport empirical_covariance(const Eigen::MatrixXd& samples, std::span<const Point2> points,
                                      Centering centering, const Eigen::MatrixXd& theoretical = {});

/// Replicate draws of operator outputs. Replicate r uses seed
/// mix64(master_seed, r); rows are stored in replicate order so results do
/// not depend on scheduling.
struct SampleBlock {
  Eigen::MatrixXd values;  // replicates x outputs
  ThetaKind kind = ThetaKind::KacStroock;
  std::uint64_t master_seed = 0;
};

/// For each operator, one block (spec.kind) or, with `cos_sin_pair`, two
/// blocks [cos, sin] from the same sheet draw. Blocks are listed per operator.
std::vector<SampleBlock> sample_operators(const ThetaSpec& spec, const Lattice& lattice,
                                          const std::vector<const SeparableOperator*>& ops, std::size_t replicates,
                                          std::uint64_t master_seed, bool cos_sin_pair = false,
                                          std::size_t workers = 0);

// ---------------------------------------------------------------------------
// (H3)

/// Piecewise-constant function on [0,1]: values[k] on [breaks[k-1], breaks[k]).
struct StepFunction {
  std::vector<double> breaks;  // strictly increasing, inside (0,1)
  std::vector<double> values;  // breaks.size() + 1

  double operator()(double x) const;
  double l2_norm_squared() const;
};

void validate(const StepFunction& f);

struct H3Result {
  MomentEstimate second_moment;  // E (int int f g theta)^2
  double bound_constant = 0.0;   // C
  double norm_product = 0.0;     // int f^2 int g^2
  MomentEstimate ratio;
  bool report_only = false;
  bool passed = true;            // ratio <= 1 with margin >= 5 SE (always true in report-only mode)
};

/// C = 136 K^2 / a(theta)^2 for the cos/sin kernels. KacStroock runs in
/// report-only mode with C = `kac_stroock_constant`.
double h3_constant(const ThetaSpec& spec, double kac_stroock_constant = 1.0);

std::vector<H3Result> h3_probe(const ThetaSpec& spec, const Lattice& lattice,
                               const std::vector<std::pair<StepFunction, StepFunction>>& pairs,
                               std::size_t replicates, std::uint64_t master_seed, double kac_stroock_constant = 1.0,
                               double se_multiple = 5.0, std::size_t workers = 0);

// ---------------------------------------------------------------------------
// (H4)

/// Kernel increment (s, s') x (t, t') and the shrinking window family
/// (s0, s0 + w_k] x (t0, t0 + w_k], w_k = base_width * ratio^k.
struct H4Setup {
  double s = 0.25, s_end = 1.0, t = 0.25, t_end = 1.0;
  double s0 = 0.5, t0 = 0.5;
  double base_width = 0.25;
  double ratio = 0.5;
  std::size_t levels = 5;
  int m = 4;
};

void validate(const H4Setup& setup);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Weighted least squares of y on x with weights 1/var; the interval is the
/// normal `level` interval.
SlopeFit weighted_slope(std::span<const double> x, std::span<const double> y, std::span<const double> var,
                        double level = 0.95);

struct H4AxisReport {
  std::vector<double> widths;
  std::vector<MomentEstimate> moments;
  SlopeFit fit;
  double gamma_hat = 0.0;  // slope / m
};

struct H4Report {
  H4Setup setup;
  double gamma = 0.0;           // 1/4 min(beta_1, beta_2)
  double predicted_slope = 0.0; // m gamma
  H4AxisReport axis_s;
  H4AxisReport axis_t;
  bool heavy_tail_warning = false;
  bool consistent = true;       // each axis CI reaches the predicted slope
};

/// Estimates E[Delta_{s0,t0} Y_n(s0', t0')]^m along each axis (the other
/// axis held at base_width) and regresses log moment on log width.
/// `beta_1`, `beta_2` come from the kernels' window bounds.
H4Report h4_probe(const ThetaSpec& spec, const KernelSpec& k1, const KernelSpec& k2, double beta_1, double beta_2,
                  const H4Setup& setup, const Lattice& lattice, std::size_t replicates, std::uint64_t master_seed,
                  std::size_t workers = 0);

// ---------------------------------------------------------------------------
// Gaussianity and independence

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t samples = 0;
  double sample_mean = 0.0;
  Centering centering = Centering::ZeroMean;
};

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// KS distance to Normal(0, variance) with the asymptotic p-value
/// Q((sqrt(N) + 0.12 + 0.11/sqrt(N)) D). Needs at least 500 samples.
/// MeanSubtracted shifts the samples by their mean first (the shape test
/// then ignores a location bias).
KsResult gaussianity_test(std::span<const double> samples, double variance,
                          Centering centering = Centering::ZeroMean);

struct IndependenceReport {
  std::vector<Point2> points;
  Eigen::MatrixXd cross;
  Eigen::MatrixXd std_error;
  double max_std_deviation = 0.0;
  bool passed = true;  // every entry within se_multiple SE of 0
};

/// Cross-covariance between two blocks drawn from the same sheet
/// realizations. Throws UncoupledInputs when their master seeds differ.
IndependenceReport independence_probe(const SampleBlock& first, const SampleBlock& second,
                                      std::span<const Point2> points, Centering centering,
                                      double se_multiple = 5.0);

// ---------------------------------------------------------------------------
// Serialization

Json to_json(const MomentEstimate& m);
Json to_json(const CovarianceReport& report);
Json to_json(const H3Result& r);
Json to_json(const H4Report& r);
Json to_json(const KsResult& r);
Json to_json(const IndependenceReport& r);
void to_json(Json& j, const StepFunction& f);
void from_json(const Json& j, StepFunction& f);
void to_json(Json& j, const H4Setup& setup);
void from_json(const Json& j, H4Setup& setup);

/// Aligned text table of empirical / theoretical / SE per entry.
void write_text(std::ostream& out, const CovarianceReport& report);
/// CSV rows: i,j,s_i,t_i,s_j,t_j,empirical,std_error,theoretical.
void write_csv(std::ostream& out, const CovarianceReport& report);

}  // namespace sheetforge
