#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <gtest/gtest.h>

#include "sheetforge/grid_field.hpp"
#include "sheetforge/parallel.hpp"
#include "sheetforge/rng.hpp"
#include "sheetforge/sheet_sim.hpp"

namespace sf = sheetforge;

namespace {

sf::GridField product_field(std::size_t m) {
  sf::GridField f(sf::Lattice(m), sf::Placement::Midpoints);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) f.at(i, j) = f.lattice.node(i) * f.lattice.node(j);
  return f;
}

struct Moments {
  double mean = 0, var = 0, se_mean = 0, se_var = 0;
};

Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double s = 0;
  for (double v : x) s += v;
  const double mean = s / n;
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return {mean, m2, std::sqrt(m2 / n), std::sqrt((m4 - m2 * m2) / n)};
}

// Pearson chi-square of integer draws against a Poisson(mean) law; cells
// with expected count < 5 are merged into the tail.
double poisson_chi_square_p(const std::vector<long long>& draws, double mean) {
  const boost::math::poisson_distribution<> law(mean);
  const double n = static_cast<double>(draws.size());
  std::map<long long, double> observed;
  for (long long d : draws) observed[d] += 1.0;
  double chi2 = 0.0, seen_prob = 0.0, seen_obs = 0.0;
  int cells = 0;
  for (long long k = 0;; ++k) {
    const double p = boost::math::pdf(law, static_cast<double>(k));
    if (n * (1.0 - seen_prob - p) < 5.0) break;
    const double o = observed.count(k) ? observed[k] : 0.0;
    chi2 += (o - n * p) * (o - n * p) / (n * p);
    seen_prob += p;
    seen_obs += o;
    ++cells;
  }
  const double tail_e = n * (1.0 - seen_prob), tail_o = n - seen_obs;
  chi2 += (tail_o - tail_e) * (tail_o - tail_e) / tail_e;
  ++cells;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(cells - 1), chi2));
}

double node_increment(const sf::GridField& f, std::size_t s, std::size_t t, std::size_t s_end, std::size_t t_end) {
  return sf::rect_increment(f, s, t, s_end, t_end);
}

}  // namespace

TEST(Lattice, NodesAndEdges) {
  const sf::Lattice lat(4);
  EXPECT_DOUBLE_EQ(lat.node(0), 0.125);
  EXPECT_DOUBLE_EQ(lat.node(3), 0.875);
  EXPECT_DOUBLE_EQ(lat.cell_edge(3), 1.0);
  const auto nodes = lat.nodes();
  for (std::size_t i = 1; i < nodes.size(); ++i) EXPECT_NEAR(nodes[i] - nodes[i - 1], 0.25, 1e-15);
  EXPECT_THROW(sf::Lattice(0), sf::Error);
}

TEST(SimulateSheet, DeterministicModelIsDriftSurface) {
  const sf::LevyModel still{0.0, 0.0, 0.0, sf::DeterministicJump{}};
  const auto zero = sf::simulate_sheet(still, 9.0, sf::Lattice(8), 3);
  for (double v : zero.field.values) EXPECT_EQ(v, 0.0);

  const sf::LevyModel drifting{0.0, 0.7, 0.0, sf::DeterministicJump{}};
  const double n = 9.0;
  const auto sample = sf::simulate_sheet(drifting, n, sf::Lattice(8), 3);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      const double x = sample.field.lattice.node(i), y = sample.field.lattice.node(j);
      EXPECT_NEAR(sample.field.at(i, j), 0.7 * (std::sqrt(n) * x) * (std::sqrt(n) * y), 1e-12);
    }
}

TEST(SimulateSheet, DeterministicReplay) {
  const sf::LevyModel m{0.4, 0.1, 2.0, sf::GaussianJump{0.2, 0.5}};
  const auto a = sf::simulate_sheet(m, 50.0, sf::Lattice(16), 99);
  const auto b = sf::simulate_sheet(m, 50.0, sf::Lattice(16), 99);
  const auto c = sf::simulate_sheet(m, 50.0, sf::Lattice(16), 100);
  EXPECT_EQ(a.field.values, b.field.values);
  EXPECT_NE(a.field.values, c.field.values);
}

TEST(SimulateSheet, RejectsNonpositiveScale) {
  EXPECT_THROW(sf::simulate_sheet(sf::LevyModel::unit_poisson(), 0.0, sf::Lattice(4), 1), sf::Error);
}

TEST(SimulateSheet, BrownianNodeVariance) {
  constexpr std::size_t kSeeds = 100000;
  const sf::Lattice lat(4);
  const double n = 5.0;
  std::vector<std::vector<double>> values(3, std::vector<double>(kSeeds));
  const std::pair<std::size_t, std::size_t> probes[3] = {{0, 0}, {1, 3}, {3, 3}};
  for (std::size_t r = 0; r < kSeeds; ++r) {
    const auto s = sf::simulate_sheet(sf::LevyModel::brownian(1.0), n, lat, sf::mix64(11, r));
    for (int p = 0; p < 3; ++p) values[p][r] = s.field.at(probes[p].first, probes[p].second);
  }
  for (int p = 0; p < 3; ++p) {
    const double expected = n * lat.node(probes[p].first) * lat.node(probes[p].second);
    const auto mo = moments(values[p]);
    EXPECT_LE(std::abs(mo.var - expected), 5.0 * mo.se_var) << "probe " << p;
    EXPECT_LE(std::abs(mo.mean), 5.0 * mo.se_mean);
  }
}

TEST(SimulateSheet, PoissonCornerMean) {
  constexpr std::size_t kSeeds = 20000;
  const sf::Lattice lat(8);
  const double n = 40.0;
  std::vector<double> corner(kSeeds);
  for (std::size_t r = 0; r < kSeeds; ++r)
    corner[r] = sf::simulate_sheet(sf::LevyModel::unit_poisson(), n, lat, sf::mix64(5, r)).field.at(7, 7);
  const auto mo = moments(corner);
  const double expected = n * lat.node(7) * lat.node(7);
  EXPECT_LE(std::abs(mo.mean - expected), 5.0 * mo.se_mean);
}

TEST(SimulateSheet, PoissonRectangleMarginal) {
  // Nodes 1..3 on M=4 span width 1/2 per axis, so the scaled area is n/4.
  const sf::Lattice lat(4);
  for (double area : {0.5, 2.0}) {
    const double n = 4.0 * area;
    std::vector<long long> draws(20000);
    for (std::size_t r = 0; r < draws.size(); ++r) {
      const auto s = sf::simulate_sheet(sf::LevyModel::unit_poisson(), n, lat, sf::mix64(17, r));
      draws[r] = std::llround(node_increment(s.field, 1, 1, 3, 3));
    }
    EXPECT_GT(poisson_chi_square_p(draws, area), 0.01) << "area " << area;
  }
}

TEST(SimulateSheet, DisjointRectanglesUncorrelated) {
  constexpr std::size_t kSeeds = 10000;
  const sf::Lattice lat(6);
  const sf::LevyModel m{0.5, 0.0, 1.0, sf::TwoPointJump{1.0, -1.0, 0.5}};
  std::vector<double> a(kSeeds), b(kSeeds);
  for (std::size_t r = 0; r < kSeeds; ++r) {
    const auto s = sf::simulate_sheet(m, 30.0, lat, sf::mix64(23, r));
    a[r] = node_increment(s.field, 1, 1, 3, 4);
    b[r] = node_increment(s.field, 3, 2, 6, 5);
  }
  const auto ma = moments(a), mb = moments(b);
  std::vector<double> prod(kSeeds);
  for (std::size_t r = 0; r < kSeeds; ++r) prod[r] = (a[r] - ma.mean) * (b[r] - mb.mean);
  const auto mp = moments(prod);
  EXPECT_LE(std::abs(mp.mean), 5.0 * mp.se_mean);
}

TEST(RectIncrement, DegenerateAndConstant) {
  const auto s = sf::simulate_sheet(sf::LevyModel::unit_poisson(), 100.0, sf::Lattice(8), 4);
  EXPECT_EQ(node_increment(s.field, 3, 2, 3, 7), 0.0);
  EXPECT_EQ(node_increment(s.field, 2, 5, 6, 5), 0.0);

  sf::GridField c(sf::Lattice(8), sf::Placement::Midpoints);
  c.values.assign(64, 2.5);
  EXPECT_EQ(node_increment(c, 2, 3, 6, 7), 0.0);
}

TEST(RectIncrement, ProductFieldGivesArea) {
  const auto f = product_field(16);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> pick(1, 16);
  for (int k = 0; k < 3; ++k) {
    std::size_t s = pick(rng), s2 = pick(rng), t = pick(rng), t2 = pick(rng);
    if (s > s2) std::swap(s, s2);
    if (t > t2) std::swap(t, t2);
    const double expected = (f.coordinate(s2) - f.coordinate(s)) * (f.coordinate(t2) - f.coordinate(t));
    EXPECT_NEAR(node_increment(f, s, t, s2, t2), expected, 1e-14);
  }
  // Axis corners: F vanishes on the axes.
  EXPECT_NEAR(node_increment(f, 0, 0, 4, 8), f.coordinate(4) * f.coordinate(8), 1e-15);
  EXPECT_NEAR(sf::rect_increment(f, 0.0, 0.0, f.coordinate(4), f.coordinate(8)),
              f.coordinate(4) * f.coordinate(8), 1e-15);
}

TEST(RectIncrement, AdditiveOverPartitions) {
  const sf::LevyModel m{0.3, 0.2, 3.0, sf::GaussianJump{0.1, 1.0}};
  const auto s = sf::simulate_sheet(m, 200.0, sf::Lattice(12), 31);
  const double whole = node_increment(s.field, 1, 2, 11, 12);
  double parts = 0.0;
  const std::size_t sx[] = {1, 4, 5, 11}, ty[] = {2, 3, 9, 12};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) parts += node_increment(s.field, sx[a], ty[b], sx[a + 1], ty[b + 1]);
  EXPECT_NEAR(parts, whole, 1e-12 * std::max(1.0, std::abs(whole)));
}

TEST(RectIncrement, Errors) {
  const auto f = product_field(4);
  EXPECT_THROW(node_increment(f, 1, 1, 5, 2), sf::Error);
  EXPECT_THROW(node_increment(f, 3, 1, 2, 2), sf::Error);
  try {
    sf::rect_increment(f, 0.1, 0.0, 0.375, 0.625);
    FAIL() << "expected NodeNotOnLattice";
  } catch (const sf::Error& e) {
    EXPECT_EQ(e.code(), sf::ErrorCode::NodeNotOnLattice);
  }
}

TEST(GridFieldExport, CsvAndEnvelope) {
  auto f = product_field(3);
  f.n = 25.0;
  f.seed = 42;
  std::ostringstream os;
  sf::write_csv(os, f);
  std::istringstream in(os.str());
  std::string header, line;
  std::getline(in, header);
  EXPECT_NE(header.find("M=3"), std::string::npos);
  EXPECT_NE(header.find("seed=42"), std::string::npos);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);

  const auto j = sf::to_json_envelope(f);
  EXPECT_EQ(j["M"], 3);
  EXPECT_EQ(j["seed"], 42);
  EXPECT_DOUBLE_EQ(j["values"][1][2].get<double>(), f.at(1, 2));
}

TEST(Parallel, VisitsEachIndexOnce) {
  std::vector<int> hits(1000, 0);
  sf::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(sf::parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
               std::runtime_error);
}

TEST(Seeds, MixIsStable) {
  EXPECT_EQ(sf::mix64(1, 0), sf::splitmix64(1 ^ sf::splitmix64(0)));
  EXPECT_NE(sf::mix64(1, 0), sf::mix64(1, 1));
  EXPECT_NE(sf::mix64(1, 0), sf::mix64(2, 0));
}
