#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sheetforge/json_util.hpp"

namespace sheetforge {

/// Midpoint lattice on [0,1] per axis: node i (1-based) sits at (i - 1/2)/M.
/// The same M also defines the quadrature cells [(i-1)/M, i/M], whose right
/// edges are where cumulative integrals (zeta) live.
class Lattice {
 public:
  explicit Lattice(std::size_t nodes_per_axis);

  std::size_t size() const noexcept { return m_; }
  double spacing() const noexcept { return 1.0 / static_cast<double>(m_); }

  /// Midpoint node, 0-based index k -> (k + 1/2)/M.
  double node(std::size_t k) const noexcept { return (static_cast<double>(k) + 0.5) / static_cast<double>(m_); }
  /// Right edge of quadrature cell k -> (k + 1)/M.
  double cell_edge(std::size_t k) const noexcept { return static_cast<double>(k + 1) / static_cast<double>(m_); }

  std::vector<double> nodes() const;

  bool operator==(const Lattice&) const = default;

 private:
  std::size_t m_;
};

enum class Placement { Midpoints, CellEdges };

/// Values of a two-parameter field on an M x M lattice, row-major:
/// at(i, j) is the value at (x_i, y_j), i along the first axis.
struct GridField {
  Lattice lattice{1};
  Placement placement = Placement::Midpoints;
  std::vector<double> values;  // M * M
  double n = 0.0;              // scale the field was produced at (metadata)
  std::uint64_t seed = 0;      // metadata

  GridField() = default;
  GridField(Lattice lat, Placement where);

  std::size_t size() const noexcept { return lattice.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * lattice.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * lattice.size() + j]; }

  /// Coordinate of 1-based node index; index 0 is the axis (coordinate 0).
  double coordinate(std::size_t index) const;

  /// Value at 1-based node indices with the null-on-axes convention.
  double value_or_axis(std::size_t i, std::size_t j) const;
};

/// Delta_{s,t} F(s',t') = F(s',t') - F(s',t) - F(s,t') + F(s,t), with
/// 1-based node indices (0 = axis, where the field is taken to be 0).
/// Throws NodeNotOnLattice for indices > M or reversed corners.
double rect_increment(const GridField& field, std::size_t s, std::size_t t, std::size_t s_end,
                      std::size_t t_end);

/// Coordinate form; each coordinate must be 0 or coincide with a node.
double rect_increment(const GridField& field, double s, double t, double s_end, double t_end);

/// Locates the 1-based node index for coordinate x (0 -> 0) or throws NodeNotOnLattice.
std::size_t locate_node(const GridField& field, double x);

void write_csv(std::ostream& out, const GridField& field);
Json to_json_envelope(const GridField& field);

}  // namespace sheetforge
