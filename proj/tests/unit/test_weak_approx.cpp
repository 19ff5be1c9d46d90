#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "sheetforge/det_kernels.hpp"
#include "sheetforge/quadrature.hpp"
#include "sheetforge/rng.hpp"
#include "sheetforge/theta_fields.hpp"
#include "sheetforge/weak_approx.hpp"

namespace sf = sheetforge;

namespace {

sf::ThetaField field_from(const sf::Lattice& lat, const std::vector<double>& values) {
  sf::ThetaField th{sf::GridField(lat, sf::Placement::Midpoints), sf::ThetaSpec::kac_stroock(1.0), 0};
  th.field.values = values;
  return th;
}

sf::ThetaField random_field(const sf::Lattice& lat, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(lat.size() * lat.size());
  for (auto& x : v) x = z(rng);
  return field_from(lat, v);
}

// Direct quadruple sum with pointwise kernel calls.
std::vector<double> naive_xn(const sf::ThetaField& th, const sf::KernelSpec& k1, const sf::KernelSpec& k2,
                             const sf::EvalGrid& grid) {
  const auto& lat = th.field.lattice;
  const std::size_t m = lat.size();
  const double h = lat.spacing();
  std::vector<double> out(grid.s.size() * grid.t.size(), 0.0);
  for (std::size_t a = 0; a < grid.s.size(); ++a)
    for (std::size_t b = 0; b < grid.t.size(); ++b) {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          sum += sf::eval_kernel(k1, grid.s[a], lat.node(i)) * sf::eval_kernel(k2, grid.t[b], lat.node(j)) *
                 th.field.at(i, j);
      out[a * grid.t.size() + b] = sum * h * h;
    }
  return out;
}

sf::ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const sf::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return sf::ErrorCode::IoError;
}

}  // namespace

TEST(EvalGrid, UniformAndValidation) {
  const auto g = sf::EvalGrid::uniform(4);
  EXPECT_EQ(g.s, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(g.t, g.s);
  EXPECT_THROW(sf::validate(sf::EvalGrid{{0.5, 0.25}, {0.5}}), sf::Error);
  EXPECT_THROW(sf::validate(sf::EvalGrid{{0.5, 1.5}, {0.5}}), sf::Error);
  EXPECT_NO_THROW(sf::validate(sf::EvalGrid{{0.0, 0.3}, {0.7}}));
}

TEST(EvalGrid, JsonForms) {
  const sf::EvalGrid g{{0.1, 0.6}, {0.2, 0.3, 0.9}};
  const sf::Json j = g;
  EXPECT_EQ(j.get<sf::EvalGrid>(), g);
  EXPECT_EQ(sf::Json({{"uniform", 3}}).get<sf::EvalGrid>(), sf::EvalGrid::uniform(3));
}

TEST(BuildXn, GemmMatchesNaiveOnRandomInstances) {
  std::mt19937_64 rng(20240607);
  std::uniform_int_distribution<std::size_t> pick_m(2, 32), pick_p(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0), alpha(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const sf::Lattice lat(pick_m(rng));
    sf::EvalGrid grid;
    for (auto* axis : {&grid.s, &grid.t}) {
      const std::size_t p = pick_p(rng);
      for (std::size_t k = 0; k < p; ++k) axis->push_back(unit(rng));
      std::sort(axis->begin(), axis->end());
    }
    const sf::KernelSpec k1 = trial % 3 == 0 ? sf::KernelSpec{sf::HolmgrenRL{alpha(rng)}}
                                             : sf::KernelSpec{sf::FbmVolterra{alpha(rng)}};
    const sf::KernelSpec k2 = trial % 2 == 0 ? sf::KernelSpec{sf::IndicatorKernel{}}
                                             : sf::KernelSpec{sf::FbmVolterra{alpha(rng)}};
    const auto th = random_field(lat, rng());
    const auto fast = sf::build_xn(th, k1, k2, grid);
    const auto slow = naive_xn(th, k1, k2, grid);
    double scale = 0.0;
    for (double v : slow) scale = std::max(scale, std::abs(v));
    for (std::size_t q = 0; q < slow.size(); ++q)
      EXPECT_NEAR(fast.values[q], slow[q], 1e-10 * std::max(scale, 1e-300)) << "trial " << trial;
  }
}

TEST(BuildXn, IndicatorKernelsReproduceZeta) {
  const sf::Lattice lat(64);
  const auto th = sf::realize_theta(sf::ThetaSpec::kac_stroock(100), lat, 9);
  const auto zeta = sf::zeta_field(th);
  sf::EvalGrid grid;
  for (std::size_t k : {3u, 15u, 40u, 63u}) grid.s.push_back(lat.cell_edge(k));
  grid.t = grid.s;
  const auto x = sf::build_xn(th, sf::IndicatorKernel{}, sf::IndicatorKernel{}, grid);
  const std::size_t idx[] = {3, 15, 40, 63};
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_NEAR(x.at(a, b), zeta.at(idx[a], idx[b]), 1e-12);
}

TEST(BuildXn, ConstantThetaSeparates) {
  const sf::Lattice lat(128);
  const auto th = field_from(lat, std::vector<double>(128 * 128, 2.0));
  const sf::EvalGrid grid{{0.3, 1.0}, {0.5, 0.9}};
  const sf::KernelSpec k1 = sf::FbmVolterra{0.7}, k2 = sf::IndicatorKernel{};
  const auto x = sf::build_xn(th, k1, k2, grid);
  const double h = lat.spacing();
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      double lattice1 = 0.0, lattice2 = 0.0;
      for (std::size_t i = 0; i < lat.size(); ++i) {
        lattice1 += h * sf::eval_kernel(k1, grid.s[a], lat.node(i));
        lattice2 += h * sf::eval_kernel(k2, grid.t[b], lat.node(i));
      }
      EXPECT_NEAR(x.at(a, b), 2.0 * lattice1 * lattice2, 1e-12);
      // Continuum mass; the midpoint sum of the singular kernel converges slowly.
      const auto rule = sf::graded_composite(0.0, grid.s[a], {}, 10);
      double mass1 = 0.0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        mass1 += rule.weights[q] * sf::eval_kernel(k1, grid.s[a], rule.nodes[q]);
      const double continuum = 2.0 * mass1 * grid.t[b];
      EXPECT_NEAR(x.at(a, b), continuum, 2e-2 * std::abs(continuum));
    }
}

TEST(BuildXn, LinearInTheta) {
  const sf::Lattice lat(16);
  const auto a = random_field(lat, 1), b = random_field(lat, 2);
  std::vector<double> sum(a.field.values.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a.field.values[i] + b.field.values[i];
  const auto grid = sf::EvalGrid::uniform(3);
  const sf::KernelSpec k = sf::FbmVolterra{0.3};
  const auto xa = sf::build_xn(a, k, k, grid), xb = sf::build_xn(b, k, k, grid);
  const auto xs = sf::build_xn(field_from(lat, sum), k, k, grid);
  for (std::size_t q = 0; q < xs.values.size(); ++q) EXPECT_NEAR(xs.values[q], xa.values[q] + xb.values[q], 1e-12);
}

TEST(BuildXn, KernelSwapTransposes) {
  const sf::Lattice lat(12);
  const auto th = random_field(lat, 3);
  std::vector<double> transposed(th.field.values.size());
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) transposed[j * 12 + i] = th.field.at(i, j);
  const sf::EvalGrid grid{{0.2, 0.7, 1.0}, {0.4, 0.9}};
  const sf::EvalGrid swapped{grid.t, grid.s};
  const sf::KernelSpec k1 = sf::FbmVolterra{0.35}, k2 = sf::HolmgrenRL{0.6};
  const auto x = sf::build_xn(th, k1, k2, grid);
  const auto y = sf::build_xn(field_from(lat, transposed), k2, k1, swapped);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 2; ++b) EXPECT_NEAR(x.at(a, b), y.at(b, a), 1e-12);
}

TEST(BuildXn, NullAxes) {
  const sf::Lattice lat(16);
  const auto th = random_field(lat, 4);
  const sf::EvalGrid grid{{0.0, 0.5, 1.0}, {0.0, 0.25, 1.0}};
  const auto x = sf::build_xn(th, sf::FbmVolterra{0.3}, sf::FbmVolterra{0.8}, grid);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(x.at(0, k), 0.0);
    EXPECT_EQ(x.at(k, 0), 0.0);
  }
}

TEST(BuildXn, OperatorReuseMatchesDirectBuild) {
  const sf::Lattice lat(20);
  const auto grid = sf::EvalGrid::uniform(4);
  const sf::SeparableOperator op(sf::FbmVolterra{0.6}, sf::FbmVolterra{0.4}, lat, grid);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto th = random_field(lat, seed);
    EXPECT_EQ(sf::build_xn(op, th).values, sf::build_xn(th, op.k1(), op.k2(), grid).values);
  }
  EXPECT_EQ(code_of([&] { sf::build_xn(op, random_field(sf::Lattice(8), 1)); }), sf::ErrorCode::OutOfRange);
}

TEST(BuildXn, ProvenanceAndExport) {
  const sf::Lattice lat(8);
  const auto th = sf::realize_theta(sf::ThetaSpec::kac_stroock(50), lat, 321);
  const auto x = sf::build_xn(th, sf::FbmVolterra{0.6}, sf::IndicatorKernel{}, sf::EvalGrid::uniform(2));
  EXPECT_EQ(x.seed, 321u);
  EXPECT_EQ(x.lattice_m, 8u);
  EXPECT_EQ(x.k1, sf::KernelSpec{sf::FbmVolterra{0.6}});
  const auto j = sf::to_json(x);
  EXPECT_TRUE(j.contains("values"));
  std::ostringstream os;
  sf::write_csv(os, x);
  EXPECT_FALSE(os.str().empty());
}

TEST(XnIncrement, DegenerateConstantAndProduct) {
  sf::ApproxField f;
  f.grid = sf::EvalGrid{{0.1, 0.4, 0.8}, {0.2, 0.5, 1.0}};
  f.values.resize(9);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) f.at(a, b) = f.grid.s[a] * f.grid.t[b];
  EXPECT_EQ(sf::xn_increment(f, 0.4, 0.2, 0.4, 1.0), 0.0);
  EXPECT_NEAR(sf::xn_increment(f, 0.1, 0.2, 0.8, 1.0), 0.7 * 0.8, 1e-15);
  EXPECT_NEAR(sf::xn_increment(f, 0.0, 0.0, 0.4, 0.5), 0.4 * 0.5, 1e-15);

  sf::ApproxField c = f;
  c.values.assign(9, 3.0);
  EXPECT_EQ(sf::xn_increment(c, 0.1, 0.2, 0.8, 0.5), 0.0);
  EXPECT_EQ(code_of([&] { sf::xn_increment(f, 0.3, 0.2, 0.8, 0.5); }), sf::ErrorCode::PointNotOnEvalGrid);
}

TEST(BuildYn, DegenerateKernelIncrementVanishes) {
  const sf::Lattice lat(16);
  const auto th = random_field(lat, 5);
  const auto y = sf::build_yn(th, sf::FbmVolterra{0.3}, sf::FbmVolterra{0.6}, 0.5, 0.5, 0.2, 0.9,
                              sf::EvalGrid::uniform(4));
  for (double v : y.values) EXPECT_EQ(v, 0.0);
}

TEST(BuildYn, FullWindowEqualsXnIncrement) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const sf::Lattice lat(24);
    const auto th = random_field(lat, rng());
    double s = unit(rng), s2 = unit(rng), t = unit(rng), t2 = unit(rng);
    if (s > s2) std::swap(s, s2);
    if (t > t2) std::swap(t, t2);
    const sf::KernelSpec k1 = sf::FbmVolterra{0.3 + 0.02 * trial}, k2 = sf::HolmgrenRL{0.7};
    const sf::EvalGrid grid{{s, s2}, {t, t2}};
    const auto x = sf::build_xn(th, k1, k2, grid);
    const auto y = sf::build_yn(th, k1, k2, s, s2, t, t2, sf::EvalGrid{{1.0}, {1.0}});
    const double inc = sf::xn_increment(x, s, t, s2, t2);
    EXPECT_NEAR(y.at(0, 0), inc, 1e-10 * std::max(1.0, std::abs(inc)));
  }
}

TEST(BuildYn, IndicatorKernelsOnConstantTheta) {
  const sf::Lattice lat(64);
  const auto th = field_from(lat, std::vector<double>(64 * 64, 1.0));
  const double s = 0.25, s2 = 0.75, t = 0.125, t2 = 0.5;
  const sf::EvalGrid window{{0.125, 0.5, 0.875, 1.0}, {0.25, 0.375, 1.0}};
  const auto y = sf::build_yn(th, sf::IndicatorKernel{}, sf::IndicatorKernel{}, s, s2, t, t2, window);
  for (std::size_t a = 0; a < window.s.size(); ++a)
    for (std::size_t b = 0; b < window.t.size(); ++b) {
      const double s0 = window.s[a], t0 = window.t[b];
      const double expected =
          (std::min(s0, s2) - std::min(s0, s)) * (std::min(t0, t2) - std::min(t0, t));
      EXPECT_NEAR(y.at(a, b), expected, 1e-12);
    }
  EXPECT_NEAR(y.at(3, 2), (s2 - s) * (t2 - t), 1e-12);
}
