#include "sheetforge/sheet_sim.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sheetforge {

namespace {

std::poisson_distribution<long long> make_count(double mean) {
  // std::poisson_distribution requires a strictly positive mean.
  return std::poisson_distribution<long long>(mean > 0.0 ? mean : 1.0);
}

}  // namespace

IncrementSampler::IncrementSampler(const LevyModel& model, double area)
    : model_(model),
      area_(area),
      mean_shift_(model.drift * area),
      diffusion_sd_(model.sigma * std::sqrt(area)),
      count_(make_count(model.jump_rate * area)) {
  validate_parameters(model);
  if (!(area >= 0.0) || !std::isfinite(area)) fail(ErrorCode::OutOfRange, "increment area must be >= 0");
}

double IncrementSampler::draw_jump(Engine& rng) {
  if (const auto* d = std::get_if<DeterministicJump>(&model_.jump_dist)) return d->h;
  if (const auto* d = std::get_if<TwoPointJump>(&model_.jump_dist))
    return uniform_(rng) < d->p ? d->h_plus : d->h_minus;
  const auto& g = std::get<GaussianJump>(model_.jump_dist);
  return g.mu + g.tau * normal_(rng);
}

double IncrementSampler::operator()(Engine& rng) {
  double value = mean_shift_;
  if (diffusion_sd_ > 0.0) value += diffusion_sd_ * normal_(rng);
  if (model_.jump_rate > 0.0 && area_ > 0.0) {
    const long long count = count_(rng);
    if (std::holds_alternative<DeterministicJump>(model_.jump_dist)) {
      value += static_cast<double>(count) * std::get<DeterministicJump>(model_.jump_dist).h;
    } else {
      for (long long k = 0; k < count; ++k) value += draw_jump(rng);
    }
  }
  return value;
}

SheetSample simulate_sheet(const LevyModel& model, double n, const Lattice& lattice, std::uint64_t seed) {
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorCode::OutOfRange, "scale n must be > 0");
  validate_parameters(model);

  const std::size_t m = lattice.size();
  const double h = lattice.spacing();
  const double widths[2] = {0.5 * h, h};  // first cell vs. the rest
  IncrementSampler samplers[2][2] = {
      {IncrementSampler(model, n * widths[0] * widths[0]), IncrementSampler(model, n * widths[0] * widths[1])},
      {IncrementSampler(model, n * widths[1] * widths[0]), IncrementSampler(model, n * widths[1] * widths[1])},
  };

  SheetSample out{GridField(lattice, Placement::Midpoints)};
  out.field.n = n;
  out.field.seed = seed;
  Engine rng = make_engine(seed);

  // Draw cells in row-major order and accumulate prefix sums in place:
  // running sum along j, then add the finished row above.
  std::vector<double> row(m);
  for (std::size_t i = 0; i < m; ++i) {
    double running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      running += samplers[i > 0][j > 0](rng);
      row[j] = running;
    }
    for (std::size_t j = 0; j < m; ++j) out.field.at(i, j) = row[j] + (i > 0 ? out.field.at(i - 1, j) : 0.0);
  }
  return out;
}

}  // namespace sheetforge
