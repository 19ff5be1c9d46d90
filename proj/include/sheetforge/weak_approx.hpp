#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sheetforge/det_kernels.hpp"
#include "sheetforge/grid_field.hpp"
#include "sheetforge/theta_fields.hpp"

namespace sheetforge {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Evaluation points per axis; sorted, inside [0,1].
struct EvalGrid {
  std::vector<double> s;
  std::vector<double> t;

  /// k/count for k = 1..count on both axes.
  static EvalGrid uniform(std::size_t count);

  bool operator==(const EvalGrid&) const = default;
};

void validate(const EvalGrid& grid);

/// X[k][l] at (s_k, t_l), row-major, plus where it came from.
struct ApproxField {
  EvalGrid grid;
  std::vector<double> values;
  ThetaSpec theta;
  KernelSpec k1;
  KernelSpec k2;
  std::size_t lattice_m = 0;
  std::uint64_t seed = 0;

  double at(std::size_t k, std::size_t l) const { return values[k * grid.t.size() + l]; }
  double& at(std::size_t k, std::size_t l) { return values[k * grid.t.size() + l]; }
};

/// Midpoint-rule quadrature matrices A[k][i] = K1(s_k, u_i) / M and
/// B[l][j] = K2(t_l, v_j) / M, built once and applied to any number of
/// theta fields on the same lattice: X = A Theta B^T.
class SeparableOperator {
 public:
  SeparableOperator(KernelSpec k1, KernelSpec k2, const Lattice& lattice, EvalGrid grid);

  /// Prebuilt factors, e.g. difference-kernel rows; the kernels are kept as provenance.
  SeparableOperator(RowMatrix left, RowMatrix right, const Lattice& lattice, EvalGrid grid, KernelSpec k1,
                    KernelSpec k2);

  const RowMatrix& left() const noexcept { return left_; }
  const RowMatrix& right() const noexcept { return right_; }
  const Lattice& lattice() const noexcept { return lattice_; }
  const EvalGrid& grid() const noexcept { return grid_; }
  const KernelSpec& k1() const noexcept { return k1_; }
  const KernelSpec& k2() const noexcept { return k2_; }

  /// A Theta B^T as a row-major |s| x |t| vector. Throws OutOfRange on a
  /// lattice mismatch.
  std::vector<double> apply(const GridField& theta) const;

 private:
  RowMatrix left_;
  RowMatrix right_;
  Lattice lattice_;
  EvalGrid grid_;
  KernelSpec k1_;
  KernelSpec k2_;
};

/// X_n(s,t) = sum_{i,j} K1(s,u_i) K2(t,v_j) theta[i][j] / M^2.
ApproxField build_xn(const ThetaField& theta, const KernelSpec& k1, const KernelSpec& k2, const EvalGrid& grid);
ApproxField build_xn(const SeparableOperator& op, const ThetaField& theta);

/// Delta_{s,t} X(s',t') on eval-grid coordinates. A coordinate of 0 that is
/// not on the grid is read as the axis, where X vanishes. Throws
/// PointNotOnEvalGrid otherwise.
double xn_increment(const ApproxField& field, double s, double t, double s_end, double t_end);

/// Operator whose factors are the difference rows (K1(s',u_i) - K1(s,u_i))
/// 1{u_i <= s0} / M for each window corner s0 in `window_grid.s` (same for
/// the second axis).
SeparableOperator yn_operator(const KernelSpec& k1, const KernelSpec& k2, double s, double s_end, double t,
                              double t_end, const Lattice& lattice, const EvalGrid& window_grid);

/// Y_n(s0,t0) = int_0^{s0} int_0^{t0} (K1(s',x) - K1(s,x)) (K2(t',y) - K2(t,y)) theta_n(x,y) dx dy
/// at the window grid points, same midpoint rule as build_xn.
ApproxField build_yn(const ThetaField& theta, const KernelSpec& k1, const KernelSpec& k2, double s,
                     double s_end, double t, double t_end, const EvalGrid& window_grid);

void to_json(Json& j, const EvalGrid& grid);
void from_json(const Json& j, EvalGrid& grid);

Json to_json(const ApproxField& field);
void write_csv(std::ostream& out, const ApproxField& field);

}  // namespace sheetforge
