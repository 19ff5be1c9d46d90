#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "sheetforge/det_kernels.hpp"
#include "sheetforge/quadrature.hpp"

namespace sf = sheetforge;

namespace {

// Lanczos approximation (g = 7, 9 terms) with reflection; ~1e-15 relative.
double lanczos_gamma(double x) {
  static const double c[] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                             771.32342877765313,   -176.61502916214059,   12.507343278686905,
                             -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

double d_alpha_oracle(double alpha) {
  return std::sqrt(2.0 * alpha * lanczos_gamma(1.5 - alpha) /
                   (lanczos_gamma(alpha + 0.5) * lanczos_gamma(2.0 - 2.0 * alpha)));
}

// Frozen 30-digit values from an arbitrary-precision Gamma.
struct FrozenD {
  double alpha;
  double value;
};
constexpr FrozenD kFrozen[] = {
    {0.3, 0.730282934079922970527223893947},
    {0.4, 0.880725683363726889896381387361},
    {0.6, 1.0760051841318072006814572284},
    {0.7, 1.0918091308839125975778269971},
    {0.75, 1.06964463503199032410070733006},
};

constexpr double kPow03_14 = 0.185340255170223585688435746388;  // 0.3^1.4

double fbm_cov(double a, double s, double s2) {
  return 0.5 * (std::pow(s, 2 * a) + std::pow(s2, 2 * a) - std::pow(std::abs(s2 - s), 2 * a));
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

TEST(DAlpha, HalfIsExactlyOne) { EXPECT_EQ(sf::d_alpha(0.5), 1.0); }

TEST(DAlpha, MatchesFrozenHighPrecisionValues) {
  for (const auto& f : kFrozen) {
    EXPECT_NEAR(sf::d_alpha(f.alpha), f.value, 1e-13) << f.alpha;
    EXPECT_NEAR(d_alpha_oracle(f.alpha), f.value, 1e-13) << f.alpha;
  }
}

TEST(DAlpha, MatchesLanczosOracleAcrossRange) {
  for (double a = 0.05; a < 0.99; a += 0.05) EXPECT_NEAR(sf::d_alpha(a), d_alpha_oracle(a), 1e-12) << a;
}

TEST(DAlpha, RejectsEndpoints) {
  EXPECT_EQ(code_of([] { sf::d_alpha(0.0); }), sf::ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { sf::d_alpha(1.0); }), sf::ErrorCode::OutOfRange);
}

TEST(EvalKernel, HalfIsIndicator) {
  const sf::KernelSpec k = sf::FbmVolterra{0.5};
  for (double t : {0.1, 0.5, 1.0})
    for (double r : {0.0, 0.05, 0.3, 0.99}) EXPECT_EQ(sf::eval_kernel(k, t, r), r > 0.0 && r < t ? 1.0 : 0.0);
}

TEST(EvalKernel, VanishesAtZeroTimeAndOutsideSupport) {
  const sf::KernelSpec specs[] = {
      sf::FbmVolterra{0.3}, sf::FbmVolterra{0.7}, sf::IndicatorKernel{}, sf::HolmgrenRL{0.3},
      sf::Goursat{{{{1.0, 2.0}, {0.5, -1.0}}}}, sf::LipschitzDiff{{0.0, 1.0}, {1.0, 3.0}},
  };
  for (const auto& k : specs) {
    for (double r : {0.0, 0.3, 1.0}) EXPECT_EQ(sf::eval_kernel(k, 0.0, r), 0.0) << sf::kernel_name(k);
    EXPECT_EQ(sf::eval_kernel(k, 0.4, 0.4), 0.0) << sf::kernel_name(k);
    EXPECT_EQ(sf::eval_kernel(k, 0.4, 0.7), 0.0) << sf::kernel_name(k);
  }
}

TEST(EvalKernel, ClosedFamilies) {
  EXPECT_NEAR(sf::eval_kernel(sf::HolmgrenRL{0.3}, 0.9, 0.4), std::sqrt(2 * std::numbers::pi) * std::pow(0.5, -0.2),
              1e-14);
  // g(t) = 1 + 2t, h(r) = 0.5 - r.
  EXPECT_NEAR(sf::eval_kernel(sf::Goursat{{{{1.0, 2.0}, {0.5, -1.0}}}}, 0.8, 0.3), 2.6 * 0.2, 1e-14);
  // h(x) = 1 + 2x on [0,1].
  EXPECT_NEAR(sf::eval_kernel(sf::LipschitzDiff{{0.0, 1.0}, {1.0, 3.0}}, 0.9, 0.4), 2.0, 1e-14);
}

TEST(EvalKernel, RejectsInvalidSpecs) {
  EXPECT_EQ(code_of([] { sf::validate(sf::KernelSpec{sf::FbmVolterra{1.0}}); }), sf::ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { sf::validate(sf::KernelSpec{sf::HolmgrenRL{0.0}}); }), sf::ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { sf::validate(sf::KernelSpec{sf::Goursat{}}); }), sf::ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { sf::validate(sf::KernelSpec{sf::LipschitzDiff{{0.5, 0.1}, {1.0, 2.0}}}); }),
            sf::ErrorCode::OutOfRange);
}

TEST(IncrementL2, Examples) {
  EXPECT_EQ(sf::increment_l2(sf::FbmVolterra{0.7}, 0.4, 0.4), 0.0);
  EXPECT_NEAR(sf::increment_l2(sf::FbmVolterra{0.7}, 0.2, 0.5), kPow03_14, 2e-3 * kPow03_14);
  EXPECT_NEAR(sf::increment_l2(sf::IndicatorKernel{}, 0.25, 0.75), 0.5, 1e-14);
}

TEST(IncrementL2, FbmIdentityOnPairs) {
  for (double a : {0.3, 0.5, 0.7})
    for (double s : {0.0, 0.1, 0.35, 0.6})
      for (double s2 : {0.2, 0.5, 0.95}) {
        if (s2 <= s) continue;
        const double exact = std::pow(s2 - s, 2 * a);
        EXPECT_NEAR(sf::increment_l2(sf::FbmVolterra{a}, s, s2), exact, 2e-3 * exact) << a << " " << s << " " << s2;
      }
}

TEST(IncrementL2, PolynomialFamiliesMatchHandIntegrals) {
  // K(t, r) = t on r < t.
  const sf::KernelSpec goursat = sf::Goursat{{{{0.0, 1.0}, {1.0}}}};
  const double s = 0.3, s2 = 0.8;
  EXPECT_NEAR(sf::increment_l2(goursat, s, s2), s * (s2 - s) * (s2 - s) + (s2 - s) * s2 * s2, 1e-12);
  // K(t, r) = t - r.
  const sf::KernelSpec lip = sf::LipschitzDiff{{0.0, 1.0}, {0.0, 1.0}};
  EXPECT_NEAR(sf::kernel_inner_product(lip, s, s2), s * s * s2 / 2 - s * s * s / 6, 1e-12);
}

TEST(IncrementL2, RejectsReversedArguments) {
  EXPECT_EQ(code_of([] { sf::increment_l2(sf::IndicatorKernel{}, 0.6, 0.2); }), sf::ErrorCode::OutOfRange);
}

TEST(Normalization, SquaredKernelIntegratesToPower) {
  for (double a : {0.3, 0.5, 0.7})
    for (double t : {0.25, 0.5, 1.0}) {
      const double exact = std::pow(t, 2 * a);
      EXPECT_NEAR(sf::kernel_inner_product(sf::FbmVolterra{a}, t, t), exact, 2e-3 * exact) << a << " " << t;
    }
  EXPECT_NEAR(sf::kernel_inner_product(sf::FbmVolterra{0.7}, 1.0, 1.0), 1.0, 1e-3);
}

TEST(Normalization, HolmgrenClosedForm) {
  const double h = 0.3, t = 0.7;
  const double exact = 2 * std::numbers::pi * std::pow(t, 2 * h) / (2 * h);
  EXPECT_NEAR(sf::kernel_inner_product(sf::HolmgrenRL{h}, t, t), exact, 2e-3 * exact);
}

TEST(InnerProduct, ClosedFormMatchesQuadrature) {
  for (double a : {0.3, 0.5, 0.7}) {
    const sf::KernelSpec k = sf::FbmVolterra{a};
    for (auto [s, s2] : {std::pair{0.25, 0.5}, {0.5, 1.0}, {0.1, 0.9}, {0.75, 0.75}}) {
      const auto closed = sf::closed_form_inner_product(k, s, s2);
      ASSERT_TRUE(closed.has_value());
      EXPECT_NEAR(*closed, fbm_cov(a, s, s2), 1e-14);
      EXPECT_NEAR(sf::kernel_inner_product(k, s, s2), *closed, 2e-3 * std::abs(*closed) + 1e-9);
    }
  }
  EXPECT_NEAR(*sf::closed_form_inner_product(sf::IndicatorKernel{}, 0.3, 0.8), 0.3, 1e-15);
  EXPECT_FALSE(sf::closed_form_inner_product(sf::HolmgrenRL{0.3}, 0.3, 0.8).has_value());
}

TEST(KernelMatrix, BitIdenticalToPointwiseCalls) {
  const std::vector<double> pts{0.0, 0.25, 0.6, 1.0};
  std::vector<double> nodes;
  for (int i = 0; i < 16; ++i) nodes.push_back((i + 0.5) / 16.0);
  for (const sf::KernelSpec& k : {sf::KernelSpec{sf::FbmVolterra{0.3}}, sf::KernelSpec{sf::HolmgrenRL{0.7}},
                                  sf::KernelSpec{sf::LipschitzDiff{{0.0, 0.5, 1.0}, {0.0, 1.0, 0.5}}}}) {
    const auto mat = sf::kernel_matrix(k, pts, nodes);
    ASSERT_EQ(mat.size(), pts.size() * nodes.size());
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t i = 0; i < nodes.size(); ++i)
        EXPECT_EQ(mat[a * nodes.size() + i], sf::eval_kernel(k, pts[a], nodes[i]));
  }
}

TEST(KernelRowCache, MatchesDirectQuadratureOnSameRule) {
  const sf::KernelRowCache cache(sf::FbmVolterra{0.3}, {0.0, 0.2, 0.45, 0.7, 1.0});
  const auto& pts = cache.points();
  for (std::size_t k = 0; k < pts.size(); ++k)
    for (std::size_t k2 = k; k2 < pts.size(); ++k2) {
      const double direct = sf::increment_l2(cache.spec(), pts[k], pts[k2], cache.rule());
      EXPECT_NEAR(cache.increment_l2(k, k2), direct, 1e-10);
      const double exact = std::pow(pts[k2] - pts[k], 0.6);
      EXPECT_NEAR(cache.increment_l2(k, k2), exact, 2e-3 * exact + 1e-12);
    }
}

TEST(KernelRowCache, RejectsUnsortedPoints) {
  EXPECT_THROW(sf::KernelRowCache(sf::IndicatorKernel{}, {0.5, 0.2}), sf::Error);
}

TEST(Profiles, FbmH1IsTight) {
  const sf::KernelRowCache cache(sf::FbmVolterra{0.7}, sf::uniform_points(32));
  sf::HypothesisProfile p;
  p.regime = sf::Regime::H1;
  p.gauge = {1.0, 1.0};
  p.exponent = 1.4;
  const auto report = sf::check_profile(cache, p);
  EXPECT_TRUE(report.passed);
  EXPECT_NEAR(report.worst_slack, 0.0, 2e-3);
  EXPECT_EQ(report.pairs_checked, 32u * 31u / 2u);
}

TEST(Profiles, IndicatorBoundaryCase) {
  const sf::KernelRowCache cache(sf::IndicatorKernel{}, sf::uniform_points(16));
  sf::HypothesisProfile h1;
  h1.regime = sf::Regime::H1;
  h1.exponent = 1.0;
  EXPECT_EQ(code_of([&] { sf::evaluate_profile(cache, h1); }), sf::ErrorCode::ProfileViolation);

  sf::HypothesisProfile h1p;
  h1p.regime = sf::Regime::H1Prime;
  h1p.exponent = 1.0;
  h1p.m_bound = 1.0;
  h1p.beta = 1.0;
  EXPECT_TRUE(sf::check_profile(cache, h1p).passed);
}

TEST(Profiles, TooTightBoundRaisesViolation) {
  const sf::KernelRowCache cache(sf::FbmVolterra{0.7}, sf::uniform_points(8));
  sf::HypothesisProfile p;
  p.regime = sf::Regime::H1;
  p.gauge = {0.9, 1.0};
  p.exponent = 1.4;
  EXPECT_FALSE(sf::evaluate_profile(cache, p).passed);
  EXPECT_EQ(code_of([&] { sf::check_profile(cache, p); }), sf::ErrorCode::ProfileViolation);
}

TEST(Profiles, HolmgrenFittedWindowBoundPasses) {
  const sf::KernelRowCache cache(sf::HolmgrenRL{0.3}, sf::uniform_points(16));
  const auto profile = sf::default_profile(cache);
  EXPECT_EQ(profile.regime, sf::Regime::H1Prime);
  EXPECT_GT(profile.beta, 0.0);
  EXPECT_LE(profile.beta, 1.0);
  EXPECT_TRUE(sf::evaluate_profile(cache, profile).passed);
}

TEST(Profiles, DefaultsByFamily) {
  const auto rough = sf::default_profile(sf::KernelRowCache(sf::FbmVolterra{0.4}, sf::uniform_points(12)));
  EXPECT_EQ(rough.regime, sf::Regime::H1Prime);
  EXPECT_DOUBLE_EQ(rough.exponent, 0.8);
  const auto smooth = sf::default_profile(sf::KernelRowCache(sf::FbmVolterra{0.6}, sf::uniform_points(12)));
  EXPECT_EQ(smooth.regime, sf::Regime::H1);
  EXPECT_DOUBLE_EQ(smooth.exponent, 1.2);
}

TEST(KernelJson, RoundTrip) {
  const sf::KernelSpec specs[] = {
      sf::FbmVolterra{0.3}, sf::IndicatorKernel{}, sf::HolmgrenRL{0.8},
      sf::Goursat{{{{1.0, 2.0}, {0.5}}, {{0.0, 0.0, 1.0}, {1.0, -1.0}}}},
      sf::LipschitzDiff{{0.0, 0.5, 1.0}, {0.0, 1.0, 0.5}},
  };
  for (const auto& k : specs) {
    const sf::Json j = k;
    EXPECT_EQ(j.get<sf::KernelSpec>(), k) << j.dump();
  }
  EXPECT_THROW((sf::Json{{"family", "nope"}}.get<sf::KernelSpec>()), sf::Error);
}

TEST(ProfileJson, RoundTrip) {
  sf::HypothesisProfile p;
  p.regime = sf::Regime::H1Prime;
  p.gauge = {2.0, 0.5};
  p.exponent = 0.6;
  p.m_bound = 3.0;
  p.beta = 0.4;
  const sf::Json j = p;
  const auto q = j.get<sf::HypothesisProfile>();
  EXPECT_EQ(q.regime, p.regime);
  EXPECT_EQ(q.gauge.scale, p.gauge.scale);
  EXPECT_EQ(q.gauge.power, p.gauge.power);
  EXPECT_EQ(q.exponent, p.exponent);
  EXPECT_EQ(q.m_bound, p.m_bound);
  EXPECT_EQ(q.beta, p.beta);
}

TEST(KernelTableCsv, HalfFbmIsZeroOneMatrix) {
  const std::vector<double> pts{0.25, 0.5, 1.0};
  const std::vector<double> nodes{0.125, 0.375, 0.625, 0.875};
  std::ostringstream os;
  sf::write_kernel_matrix_csv(os, sf::FbmVolterra{0.5}, pts, nodes);
  const auto mat = sf::kernel_matrix(sf::FbmVolterra{0.5}, pts, nodes);
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t i = 0; i < nodes.size(); ++i) EXPECT_EQ(mat[a * 4 + i], nodes[i] < pts[a] ? 1.0 : 0.0);
  EXPECT_FALSE(os.str().empty());
}

TEST(Quadrature, GaussRuleIntegratesPolynomialsExactly) {
  const auto& rule = sf::gauss_legendre(6);
  EXPECT_NEAR(sf::integrate_gauss([](double x) { return std::pow(x, 11); }, 0.0, 1.0, rule), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(sf::integrate_adaptive([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-10), 2.0 / 3.0, 1e-8);
  const auto graded = sf::graded_composite(0.0, 1.0, {}, 10);
  std::vector<double> values;
  for (double x : graded.nodes) values.push_back(1.0 / std::sqrt(x));
  EXPECT_NEAR(graded.integrate(values), 2.0, 1e-6);
}
