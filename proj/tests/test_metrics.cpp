#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "maskforge/baseline_masks.hpp"
#include "maskforge/images.hpp"
#include "maskforge/metrics.hpp"
#include "oracles.hpp"

using namespace maskforge;
constexpr double kTwoPi = 2 * std::numbers::pi;

TEST(Eta, DcOnlyIsZero) {
  RealField s(16, 16, 0.0);
  s(0, 0) = 5.0;
  EXPECT_EQ(eta(s), 0.0);
}

TEST(Eta, CornersAreOne) {
  RealField s(16, 16, 0.0);
  s(8, 8) = 1;  // (-8, -8) in signed indexing
  s(8, 9) = 1;
  s(9, 8) = 1;
  s(9, 9) = 1;
  EXPECT_DOUBLE_EQ(eta(s), 1.0);
}

TEST(Eta, FlatSpectrumByCounting) {
  const RealField s(100, 100, 1.0);
  std::size_t inside = 0;
  for (int a = -50; a < 50; ++a)
    for (int b = -50; b < 50; ++b)
      if (std::max(std::abs(a), std::abs(b)) / 50.0 < 0.8) ++inside;
  EXPECT_EQ(inside, 79u * 79u);
  EXPECT_NEAR(eta(s), 0.3759, 1e-12);
  EXPECT_NEAR(eta(s), 1.0 - inside / 1e4, 1e-12);
}

TEST(Eta, ErrorsOnEmptyOrNegative) {
  try {
    eta(RealField(4, 4, 0.0));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty spectrum"), std::string::npos);
  }
  RealField s(4, 4, 1.0);
  s[2] = -1;
  EXPECT_THROW(eta(s), ValidationError);
}

TEST(Eta, ScaleInvariantAndThresholdMonotone) {
  std::mt19937_64 g(1);
  std::exponential_distribution<double> ed;
  for (int t = 0; t < 20; ++t) {
    RealField s(24, 30);
    for (auto& v : s) v = ed(g);
    EXPECT_NEAR(eta(s), eta(map_grid(s, [](double v) { return 7.3 * v; })), 1e-14);
    double prev = 1.0;
    for (double thr = 0.0; thr <= 1.0; thr += 0.05) {
      const double e = eta(s, thr);
      EXPECT_LE(e, prev + 1e-15);
      prev = e;
    }
  }
}

TEST(SpectrumStats, AxisAndRadialShapes) {
  RealField s(16, 16, 1.0);
  s(0, 0) = 100.0;
  const auto st = spectrum_stats(s);
  ASSERT_EQ(st.axis_power_db.size(), 16u);
  EXPECT_NEAR(st.axis_power_db[8], 20.0, 1e-12);
  EXPECT_NEAR(st.axis_power_db[0], 0.0, 1e-12);
  EXPECT_NEAR(st.radial_power[0], 100.0, 1e-12);
  for (std::size_t b = 1; b < st.radial_power.size(); ++b) EXPECT_NEAR(st.radial_power[b], 1.0, 1e-12);
  EXPECT_NEAR(axis_high_frequency_power_db(s), 0.0, 1e-12);
}

TEST(Entropy, ConstantBinaryAndUniform) {
  QuantizedMask c{Grid<std::uint16_t>(32, 32, 3), Codebook::uniform(16), 1, 0};
  EXPECT_EQ(local_entropy(c, 8), 0.0);
  for (const auto& m : generate_green_binary_approx(64, 2, 3)) EXPECT_LE(local_entropy(m, 16), 1.0);
  const double e = local_entropy(generate_white16(256, 1, 7)[0], 32);
  EXPECT_GE(e, 3.8);
  EXPECT_LE(e, 4.0);
}

TEST(Entropy, BlockMismatch) {
  QuantizedMask c{Grid<std::uint16_t>(30, 30, 0), Codebook::uniform(2), 1, 0};
  try {
    local_entropy(c, 8);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("block mismatch"), std::string::npos);
  }
}

TEST(Entropy, BoundedByLog2Levels) {
  std::mt19937_64 g(4);
  for (std::uint32_t m : {2u, 3u, 4u, 16u, 64u}) {
    const auto mask = oracle::random_mask(32, m, g);
    const double e = local_entropy(mask, 16);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, std::log2(m) + 1e-12);
  }
}

TEST(PsnrPhase, GlobalPhaseGivesInfinity) {
  const ComplexField x = phase_object(images::natural(32));
  for (int k = 0; k < 10; ++k) {
    ComplexField y = x;
    for (auto& v : y) v *= std::polar(1.0, 0.6 * k - 2.0);
    EXPECT_TRUE(std::isinf(psnr_phase(x, y)));
  }
  EXPECT_TRUE(std::isinf(psnr_phase(x, x)));
}

TEST(PsnrPhase, GaussianPhaseErrors) {
  std::mt19937_64 g(5);
  std::normal_distribution<double> nd(0.0, 0.1);
  const ComplexField x = phase_object(images::cells(256));
  ComplexField y = x;
  for (auto& v : y) v *= std::polar(1.0, nd(g));
  EXPECT_NEAR(psnr_phase(x, y), 10 * std::log10(kTwoPi * kTwoPi / 0.01), 0.5);
}

TEST(PsnrPhase, InvariantToGlobalFactorOnEitherSide) {
  std::mt19937_64 g(6);
  std::normal_distribution<double> nd(0.0, 0.2);
  const ComplexField x = phase_object(images::vortex(32));
  ComplexField y = x;
  for (auto& v : y) v *= std::polar(1.0, nd(g));
  const double base = psnr_phase(x, y);
  ComplexField xr = x, yr = y;
  for (auto& v : xr) v *= std::polar(1.0, 2.2);
  for (auto& v : yr) v *= std::polar(1.0, -0.9);
  EXPECT_NEAR(psnr_phase(xr, y), base, 1e-9);
  EXPECT_NEAR(psnr_phase(x, yr), base, 1e-9);
}

TEST(SsimPhase, IdenticalIsExactlyOne) {
  const ComplexField x = phase_object(images::usaf(64));
  EXPECT_EQ(ssim_phase(x, x), 1.0);
}

TEST(SsimPhase, ReflectedPhaseIsDissimilar) {
  const std::size_t n = 64;
  PhaseField p(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) p(r, c) = 0.3 + 5.6 * (r + c) / (2.0 * (n - 1));
  // reflect the phase map about pi
  const PhaseField q = map_grid(p, [](double v) { return kTwoPi - v; });
  EXPECT_LT(ssim_phase(unit_phasors(p), unit_phasors(q)), 0.5);
}

TEST(SsimPhase, IndependentRandomPhasesNearZero) {
  std::mt19937_64 g(7);
  const ComplexField a = unit_phasors(oracle::random_phase(64, 64, g));
  const ComplexField b = unit_phasors(oracle::random_phase(64, 64, g));
  EXPECT_LT(std::abs(ssim_phase(a, b)), 0.1);
}

TEST(SsimPhase, InvariantToGlobalFactorOnEstimate) {
  std::mt19937_64 g(8);
  std::normal_distribution<double> nd(0.0, 0.2);
  const ComplexField x = phase_object(images::cells(32));
  ComplexField y = x;
  for (auto& v : y) v *= std::polar(1.0, nd(g));
  ComplexField yr = y;
  for (auto& v : yr) v *= std::polar(1.0, 1.7);
  EXPECT_NEAR(ssim_phase(x, yr), ssim_phase(x, y), 1e-9);
}

TEST(Wrap, Ranges) {
  EXPECT_NEAR(wrap_pi(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(wrap_pi(-std::numbers::pi), -std::numbers::pi, 1e-15);
  EXPECT_NEAR(wrap_2pi(-1.0), kTwoPi - 1.0, 1e-15);
  EXPECT_EQ(wrap_2pi(kTwoPi - 1e-12), 0.0);
}
