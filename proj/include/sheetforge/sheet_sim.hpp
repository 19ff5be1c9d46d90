#pragma once

#include <cstdint>
#include <random>

#include "sheetforge/grid_field.hpp"
#include "sheetforge/levy_model.hpp"
#include "sheetforge/rng.hpp"

namespace sheetforge {

/// Draws increments of a Levy sheet over a rectangle of fixed area:
/// drift*A + sigma*N(0, A) + sum_{k <= Poisson(lambda A)} J_k.
/// Per draw the stream is consumed in a fixed order (normal, count, jumps).
class IncrementSampler {
 public:
  IncrementSampler(const LevyModel& model, double area);

  double operator()(Engine& rng);

  double area() const noexcept { return area_; }

 private:
  double draw_jump(Engine& rng);

  LevyModel model_;
  double area_;
  double mean_shift_;
  double diffusion_sd_;
  std::poisson_distribution<long long> count_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Sheet values L(sqrt(n) x_i, sqrt(n) y_j) at the midpoint nodes.
struct SheetSample {
  GridField field;
};

/// Exact joint sample of the sheet at the lattice midpoints. The sheet
/// partition has edges 0, x_1, ..., x_M, so the first row and column of cells
/// have half width; each cell's scaled area is n * dx * dy. Node values are
/// rectangular partial sums of independent cell increments.
SheetSample simulate_sheet(const LevyModel& model, double n, const Lattice& lattice, std::uint64_t seed);

}  // namespace sheetforge
