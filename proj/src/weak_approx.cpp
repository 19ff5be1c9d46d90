#include "sheetforge/weak_approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace sheetforge {

namespace {

constexpr double kCoordTol = 1e-12;

RowMatrix quadrature_rows(const KernelSpec& spec, const std::vector<double>& points, const Lattice& lattice) {
  const auto nodes = lattice.nodes();
  const auto raw = kernel_matrix(spec, points, nodes);
  RowMatrix out(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(nodes.size()));
  const double h = lattice.spacing();
  for (std::size_t k = 0; k < points.size(); ++k)
    for (std::size_t i = 0; i < nodes.size(); ++i)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = raw[k * nodes.size() + i] * h;
  return out;
}

// Difference row (K(b,u_i) - K(a,u_i)) h, masked by u_i <= corner for each window corner.
RowMatrix window_rows(const KernelSpec& spec, double a, double b, const std::vector<double>& corners,
                      const Lattice& lattice) {
  const auto nodes = lattice.nodes();
  const std::vector<double> ends{a, b};
  const auto raw = kernel_matrix(spec, ends, nodes);
  const std::size_t m = nodes.size();
  const double h = lattice.spacing();
  RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(corners.size()), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < corners.size(); ++k)
    for (std::size_t i = 0; i < m && nodes[i] <= corners[k] + kCoordTol; ++i)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = (raw[m + i] - raw[i]) * h;
  return out;
}

std::size_t locate(const std::vector<double>& axis, double x, bool& on_axis) {
  on_axis = false;
  auto it = std::lower_bound(axis.begin(), axis.end(), x - kCoordTol);
  if (it != axis.end() && std::abs(*it - x) <= kCoordTol) return static_cast<std::size_t>(it - axis.begin());
  if (x == 0.0) {
    on_axis = true;
    return 0;
  }
  fail(ErrorCode::PointNotOnEvalGrid, "coordinate " + std::to_string(x) + " is not an eval-grid point");
}

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) fail(ErrorCode::OutOfRange, std::string("eval grid: axis ") + name + " is empty");
  for (std::size_t k = 0; k < axis.size(); ++k) {
    if (!(axis[k] >= 0.0 && axis[k] <= 1.0))
      fail(ErrorCode::OutOfRange, std::string("eval grid: ") + name + " point outside [0,1]");
    if (k > 0 && !(axis[k] > axis[k - 1]))
      fail(ErrorCode::OutOfRange, std::string("eval grid: ") + name + " points must be strictly increasing");
  }
}

}  // namespace

EvalGrid EvalGrid::uniform(std::size_t count) {
  if (count == 0) fail(ErrorCode::OutOfRange, "eval grid needs at least one point");
  EvalGrid g;
  for (std::size_t k = 1; k <= count; ++k) g.s.push_back(static_cast<double>(k) / static_cast<double>(count));
  g.t = g.s;
  return g;
}

void validate(const EvalGrid& grid) {
  check_axis(grid.s, "s");
  check_axis(grid.t, "t");
}

SeparableOperator::SeparableOperator(KernelSpec k1, KernelSpec k2, const Lattice& lattice, EvalGrid grid)
    : lattice_(lattice), grid_(std::move(grid)), k1_(std::move(k1)), k2_(std::move(k2)) {
  validate(k1_);
  validate(k2_);
  validate(grid_);
  if (lattice.size() < 2) fail(ErrorCode::OutOfRange, "lattice needs M >= 2");
  left_ = quadrature_rows(k1_, grid_.s, lattice_);
  right_ = quadrature_rows(k2_, grid_.t, lattice_);
}

SeparableOperator::SeparableOperator(RowMatrix left, RowMatrix right, const Lattice& lattice, EvalGrid grid,
                                     KernelSpec k1, KernelSpec k2)
    : left_(std::move(left)),
      right_(std::move(right)),
      lattice_(lattice),
      grid_(std::move(grid)),
      k1_(std::move(k1)),
      k2_(std::move(k2)) {
  const auto m = static_cast<Eigen::Index>(lattice.size());
  if (left_.cols() != m || right_.cols() != m || left_.rows() != static_cast<Eigen::Index>(grid_.s.size()) ||
      right_.rows() != static_cast<Eigen::Index>(grid_.t.size()))
    fail(ErrorCode::OutOfRange, "separable operator: factor shapes do not match lattice and grid");
}

std::vector<double> SeparableOperator::apply(const GridField& theta) const {
  if (!(theta.lattice == lattice_)) fail(ErrorCode::OutOfRange, "theta lattice does not match the operator");
  const auto m = static_cast<Eigen::Index>(lattice_.size());
  Eigen::Map<const RowMatrix> field(theta.values.data(), m, m);
  std::vector<double> out(grid_.s.size() * grid_.t.size());
  Eigen::Map<RowMatrix> result(out.data(), left_.rows(), right_.rows());
  result.noalias() = (left_ * field) * right_.transpose();
  return out;
}

ApproxField build_xn(const SeparableOperator& op, const ThetaField& theta) {
  return ApproxField{op.grid(), op.apply(theta.field), theta.spec, op.k1(), op.k2(), theta.field.size(), theta.seed};
}

ApproxField build_xn(const ThetaField& theta, const KernelSpec& k1, const KernelSpec& k2, const EvalGrid& grid) {
  return build_xn(SeparableOperator(k1, k2, theta.field.lattice, grid), theta);
}

double xn_increment(const ApproxField& field, double s, double t, double s_end, double t_end) {
  if (s > s_end || t > t_end) fail(ErrorCode::PointNotOnEvalGrid, "rectangle corners must satisfy s <= s', t <= t'");
  bool zs = false, zt = false, zs2 = false, zt2 = false;
  const std::size_t i0 = locate(field.grid.s, s, zs), i1 = locate(field.grid.s, s_end, zs2);
  const std::size_t j0 = locate(field.grid.t, t, zt), j1 = locate(field.grid.t, t_end, zt2);
  auto value = [&](std::size_t i, bool axis_i, std::size_t j, bool axis_j) {
    return (axis_i || axis_j) ? 0.0 : field.at(i, j);
  };
  return value(i1, zs2, j1, zt2) - value(i1, zs2, j0, zt) - value(i0, zs, j1, zt2) + value(i0, zs, j0, zt);
}

SeparableOperator yn_operator(const KernelSpec& k1, const KernelSpec& k2, double s, double s_end, double t,
                              double t_end, const Lattice& lattice, const EvalGrid& window_grid) {
  validate(k1);
  validate(k2);
  validate(window_grid);
  if (!(s <= s_end && t <= t_end)) fail(ErrorCode::OutOfRange, "Y_n needs s <= s' and t <= t'");
  return SeparableOperator(window_rows(k1, s, s_end, window_grid.s, lattice),
                           window_rows(k2, t, t_end, window_grid.t, lattice), lattice, window_grid, k1, k2);
}

ApproxField build_yn(const ThetaField& theta, const KernelSpec& k1, const KernelSpec& k2, double s,
                     double s_end, double t, double t_end, const EvalGrid& window_grid) {
  return build_xn(yn_operator(k1, k2, s, s_end, t, t_end, theta.field.lattice, window_grid), theta);
}

void to_json(Json& j, const EvalGrid& grid) { j = Json{{"s", grid.s}, {"t", grid.t}}; }

void from_json(const Json& j, EvalGrid& grid) {
  constexpr std::string_view ctx = "eval_grid";
  require_known_keys(j, {"s", "t", "uniform"}, ctx);
  if (j.contains("uniform")) {
    if (j.contains("s") || j.contains("t")) fail(ErrorCode::ConfigError, "eval_grid: give either 'uniform' or 's'/'t'");
    grid = EvalGrid::uniform(require_field<std::size_t>(j, "uniform", ctx));
  } else {
    grid.s = require_field<std::vector<double>>(j, "s", ctx);
    grid.t = require_field<std::vector<double>>(j, "t", ctx);
  }
  validate(grid);
}

Json to_json(const ApproxField& field) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < field.grid.s.size(); ++k) {
    Json row = Json::array();
    for (std::size_t l = 0; l < field.grid.t.size(); ++l) row.push_back(field.at(k, l));
    rows.push_back(std::move(row));
  }
  return Json{{"format", "sheetforge.approx_field"},
              {"version", 1},
              {"provenance",
               {{"theta", field.theta}, {"k1", field.k1}, {"k2", field.k2}, {"M", field.lattice_m}, {"seed", field.seed}}},
              {"grid", field.grid},
              {"values", rows}};
}

void write_csv(std::ostream& out, const ApproxField& field) {
  char buf[32];
  out << "# theta=" << to_string(field.theta.kind) << ",k1=" << kernel_name(field.k1)
      << ",k2=" << kernel_name(field.k2) << ",M=" << field.lattice_m << ",seed=" << field.seed << '\n';
  out << "s\\t";
  for (double t : field.grid.t) {
    std::snprintf(buf, sizeof buf, "%.17g", t);
    out << ',' << buf;
  }
  out << '\n';
  for (std::size_t k = 0; k < field.grid.s.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", field.grid.s[k]);
    out << buf;
    for (std::size_t l = 0; l < field.grid.t.size(); ++l) {
      std::snprintf(buf, sizeof buf, "%.17g", field.at(k, l));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace sheetforge
