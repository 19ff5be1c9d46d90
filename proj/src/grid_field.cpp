#include "sheetforge/grid_field.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace sheetforge {

Lattice::Lattice(std::size_t nodes_per_axis) : m_(nodes_per_axis) {
  if (nodes_per_axis == 0) fail(ErrorCode::OutOfRange, "lattice needs at least one node per axis");
}

std::vector<double> Lattice::nodes() const {
  std::vector<double> out(m_);
  for (std::size_t k = 0; k < m_; ++k) out[k] = node(k);
  return out;
}

GridField::GridField(Lattice lat, Placement where)
    : lattice(lat), placement(where), values(lat.size() * lat.size(), 0.0) {}

double GridField::coordinate(std::size_t index) const {
  if (index == 0) return 0.0;
  return placement == Placement::Midpoints ? lattice.node(index - 1) : lattice.cell_edge(index - 1);
}

double GridField::value_or_axis(std::size_t i, std::size_t j) const {
  if (i == 0 || j == 0) return 0.0;
  return at(i - 1, j - 1);
}

double rect_increment(const GridField& field, std::size_t s, std::size_t t, std::size_t s_end,
                      std::size_t t_end) {
  const std::size_t m = field.size();
  if (s > m || t > m || s_end > m || t_end > m)
    fail(ErrorCode::NodeNotOnLattice, "rectangle corner index exceeds lattice size");
  if (s > s_end || t > t_end)
    fail(ErrorCode::NodeNotOnLattice, "rectangle corners must satisfy s <= s' and t <= t'");
  return field.value_or_axis(s_end, t_end) - field.value_or_axis(s_end, t) -
         field.value_or_axis(s, t_end) + field.value_or_axis(s, t);
}

std::size_t locate_node(const GridField& field, double x) {
  if (x == 0.0) return 0;
  const double m = static_cast<double>(field.size());
  // Midpoints: x = (i - 1/2)/M; edges: x = i/M.
  const double raw = field.placement == Placement::Midpoints ? x * m + 0.5 : x * m;
  const double idx = std::round(raw);
  if (idx < 1.0 || idx > m || std::abs(raw - idx) > 1e-9)
    fail(ErrorCode::NodeNotOnLattice, "coordinate " + std::to_string(x) + " is not a lattice node");
  return static_cast<std::size_t>(idx);
}

double rect_increment(const GridField& field, double s, double t, double s_end, double t_end) {
  return rect_increment(field, locate_node(field, s), locate_node(field, t), locate_node(field, s_end),
                        locate_node(field, t_end));
}

void write_csv(std::ostream& out, const GridField& field) {
  const std::size_t m = field.size();
  out << "# M=" << m << ",n=";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", field.n);
  out << buf << ",seed=" << field.seed
      << ",placement=" << (field.placement == Placement::Midpoints ? "midpoints" : "cell_edges") << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", field.at(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

Json to_json_envelope(const GridField& field) {
  const std::size_t m = field.size();
  Json coords = Json::array();
  for (std::size_t i = 1; i <= m; ++i) coords.push_back(field.coordinate(i));
  Json rows = Json::array();
  for (std::size_t i = 0; i < m; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m; ++j) row.push_back(field.at(i, j));
    rows.push_back(std::move(row));
  }
  return Json{{"format", "sheetforge.grid"},
              {"version", 1},
              {"M", m},
              {"n", field.n},
              {"seed", field.seed},
              {"placement", field.placement == Placement::Midpoints ? "midpoints" : "cell_edges"},
              {"coordinates", coords},
              {"values", rows}};
}

}  // namespace sheetforge
