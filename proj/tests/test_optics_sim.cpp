#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "maskforge/baseline_masks.hpp"
#include "maskforge/mask_design.hpp"
#include "maskforge/metrics.hpp"
#include "maskforge/optics_sim.hpp"
#include "oracles.hpp"

using namespace maskforge;

namespace {

ComplexField masked(const ComplexField& x, const QuantizedMask& m) {
  ComplexField y = m.transmission();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= x[i];
  return y;
}

// Smooth Gaussian amplitude that is negligible at the support edge.
ComplexField gaussian_object(std::size_t n) {
  ComplexField x(n, n);
  const double c = (n - 1) / 2.0, s = n / 8.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k)
      x(r, k) = std::exp(-((r - c) * (r - c) + (k - c) * (k - c)) / (2 * s * s));
  return x;
}

double rel_diff(const RealField& a, const RealField& b) {
  double d = 0, s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    s += b[i] * b[i];
  }
  return std::sqrt(d / s);
}

}  // namespace

TEST(Geometry, DefaultMeasurementSide) {
  EXPECT_EQ(OpticalGeometry{}.measurement_side(), 762u);
  EXPECT_NO_THROW(OpticalGeometry{}.validate(256));
  EXPECT_THROW(OpticalGeometry{}.validate(1024), ValidationError);
  OpticalGeometry g;
  g.fill_factor = 0.0;
  EXPECT_THROW(g.validate(16), ValidationError);
}

TEST(Model, FidelityRequiresMatchingSupersample) {
  MeasurementModel m = MeasurementModel::discrete();
  m.supersample = 2;
  EXPECT_THROW(m.validate(8), ValidationError);
  EXPECT_THROW(MeasurementModel::optical(1).validate(8), ValidationError);
  EXPECT_NO_THROW(MeasurementModel::optical(2).validate(8));
  EXPECT_EQ(MeasurementModel::optical(4, 12).sensor_bits, 12u);
}

TEST(Discrete, UniformFieldIsADelta) {
  const ComplexField x(2, 2, cplx(1, 0));
  QuantizedMask m{Grid<std::uint16_t>(2, 2, 0), Codebook::uniform(2), 1, 0};
  const auto meas = cdp_intensity_discrete(x, m, 2, 2);
  EXPECT_NEAR(meas.values(0, 0), 4.0, 1e-12);
  EXPECT_NEAR(meas.values(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(meas.values(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(meas.values(1, 1), 0.0, 1e-12);
  EXPECT_EQ(meas.truncated_energy_fraction, 0.0);
}

TEST(Discrete, MatchesDirectSummation) {
  std::mt19937_64 g(99);
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t pad : {n, n + 1, 2 * n + 3}) {
      const ComplexField x = oracle::random_field(n, n, g);
      const QuantizedMask m = oracle::random_mask(n, 16, g);
      const auto got = cdp_intensity_discrete(x, m, pad, pad + 1);
      const RealField want = oracle::dft_intensity(masked(x, m), pad, pad + 1);
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.values[i], want[i], 1e-9);
    }
}

TEST(Discrete, Parseval) {
  std::mt19937_64 g(4);
  const ComplexField x = oracle::random_field(32, 32, g);
  const QuantizedMask m = oracle::random_mask(32, 16, g);
  const auto meas = cdp_intensity_discrete(x, m, 96, 96);
  double s = 0;
  for (double v : meas.values) s += v;
  EXPECT_NEAR(s, sum_norm(x), 1e-10 * sum_norm(x));
}

TEST(Discrete, RejectsMismatchAndSmallPad) {
  const ComplexField x(4, 4, cplx(1, 0));
  const QuantizedMask m{Grid<std::uint16_t>(5, 5, 0), Codebook::uniform(2), 1, 0};
  EXPECT_THROW(cdp_intensity_discrete(x, m, 8, 8), ValidationError);
  const QuantizedMask m4{Grid<std::uint16_t>(4, 4, 0), Codebook::uniform(2), 1, 0};
  EXPECT_THROW(cdp_intensity_discrete(x, m4, 3, 8), ValidationError);
}

TEST(Optical, SmoothObjectWithoutMaskBarelyLeaks) {
  // pixelation alone leaks about 0.08 / sigma^2, so sigma must be a few tens of pixels
  const std::size_t n = 128;
  OpticalGeometry geom;
  geom.fill_factor = 1.0;
  const QuantizedMask flat{Grid<std::uint16_t>(n, n, 0), Codebook::uniform(16), 1, 0};
  const auto m = cdp_intensity_optical(gaussian_object(n), flat, geom, MeasurementModel::optical(4));
  EXPECT_LT(m.truncated_energy_fraction, 1e-3);
  for (double v : m.values) EXPECT_GE(v, 0.0);
}

TEST(Optical, EnvelopeCompensatedBandEqualsDiscrete) {
  std::mt19937_64 g(12);
  const std::size_t n = 8, p = 20;
  const ComplexField x = oracle::random_field(n, n, g);
  const QuantizedMask m = oracle::random_mask(n, 16, g);
  OpticalGeometry geom;
  geom.fill_factor = 1.0;
  for (std::uint32_t s : {2u, 3u, 4u}) {
    MeasurementModel model = MeasurementModel::optical(s);
    model.pad_rows = model.pad_cols = p;
    const auto opt = cdp_intensity_optical(x, m, geom, model);
    const RealField ref = oracle::dft_intensity(masked(x, m), p, p);
    // per-axis response of an s-sample box at fine frequency k / (s p)
    auto h = [&](std::size_t k) {
      const long ks = signed_frequency(k, p);
      cplx acc{};
      for (std::uint32_t r = 0; r < s; ++r) acc += std::polar(1.0, -2 * std::numbers::pi * ks * r / double(s * p));
      return std::norm(acc) / double(s * s);
    };
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = 0; c < p; ++c)
        EXPECT_NEAR(opt.values(r, c) / (h(r) * h(c)), ref(r, c), 1e-9 * (1 + ref(r, c)));
  }
}

TEST(Optical, ConvergesAsSupersamplingGrows) {
  std::mt19937_64 g(13);
  const std::size_t n = 16;
  const ComplexField x = unit_phasors(oracle::random_phase(n, n, g));
  const QuantizedMask m = oracle::random_mask(n, 16, g);
  OpticalGeometry geom;
  geom.fill_factor = 1.0;
  RealField e[3];
  const std::uint32_t ss[3] = {2, 4, 8};
  for (int i = 0; i < 3; ++i) e[i] = cdp_intensity_optical(x, m, geom, MeasurementModel::optical(ss[i])).values;
  EXPECT_GT(rel_diff(e[1], e[0]), rel_diff(e[2], e[1]));
}

TEST(Optical, WhiteNoiseLeaksMoreThanOptMask) {
  const std::size_t n = 64;
  DesignConfig cfg;
  cfg.n = n;
  cfg.l_masks = 3;
  const MaskSet opt = design_optmask(cfg);
  const MaskSet white = generate_white16(n, 3, 600);
  const ComplexField x = gaussian_object(n);
  double t_opt = 0, t_white = 0;
  const auto model = MeasurementModel::optical(4);
  for (const auto& m : measure_stack(x, opt, {}, model)) t_opt += m.truncated_energy_fraction / 3;
  for (const auto& m : measure_stack(x, white, {}, model)) t_white += m.truncated_energy_fraction / 3;
  EXPECT_GT(t_white, t_opt);
}

TEST(Optical, LeakageFollowsEtaAcrossSchemes) {
  const std::size_t n = 64;
  DesignConfig cfg;
  cfg.n = n;
  cfg.l_masks = 3;
  std::vector<MaskSet> sets{design_optmask(cfg), generate_green_binary_approx(n, 3, 500),
                            generate_white16(n, 3, 600), generate_white4(n, 3, 700)};
  const ComplexField x = unit_phasors(PhaseField(n, n, 0.0));
  std::vector<std::pair<double, double>> eta_trunc;
  for (const auto& s : sets) {
    double e = 0, t = 0;
    for (const auto& m : measure_stack(x, s, {}, MeasurementModel::optical(4))) {
      e += eta(m.values) / 3;
      t += m.truncated_energy_fraction / 3;
    }
    eta_trunc.emplace_back(e, t);
  }
  // schemes whose eta differs by a clear margin must order their leakage the same way
  for (std::size_t a = 0; a < eta_trunc.size(); ++a)
    for (std::size_t b = 0; b < eta_trunc.size(); ++b)
      if (eta_trunc[a].first + 0.01 < eta_trunc[b].first) {
        EXPECT_LE(eta_trunc[a].second, eta_trunc[b].second);
      }
}

TEST(Optical, SizeLimitFromEnvironment) {
  setenv("MASKFORGE_DFT_LIMIT", "100", 1);
  const QuantizedMask m{Grid<std::uint16_t>(16, 16, 0), Codebook::uniform(2), 1, 0};
  const ComplexField x(16, 16, cplx(1, 0));
  try {
    cdp_intensity_optical(x, m, {}, MeasurementModel::optical(4));
    unsetenv("MASKFORGE_DFT_LIMIT");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("emulation too large"), std::string::npos);
  }
  unsetenv("MASKFORGE_DFT_LIMIT");
  EXPECT_EQ(dft_size_limit(), kDefaultDftLimit);
}

TEST(Sensor, QuantizesToBitDepthWithFullScaleAtPeak) {
  RealField v(1, 5);
  v[0] = 0.0;
  v[1] = 0.1;
  v[2] = 0.5;
  v[3] = 0.77;
  v[4] = 1.0;
  MeasurementModel m;
  m.sensor_bits = 4;
  apply_sensor(v, m, 0);
  for (double x : v) EXPECT_NEAR(x * 15 - std::round(x * 15), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(v[4], 1.0);
}

TEST(Sensor, PoissonNoiseIsSeeded) {
  RealField a(8, 8, 2.0), b = a, c = a;
  MeasurementModel m;
  m.photon_scale = 50;
  apply_sensor(a, m, 1);
  apply_sensor(b, m, 1);
  apply_sensor(c, m, 2);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  for (double v : a) EXPECT_GE(v, 0.0);
}

TEST(Stack, NoiselessDiscreteIgnoresNoiseSeed) {
  std::mt19937_64 g(3);
  const ComplexField x = oracle::random_field(8, 8, g);
  const MaskSet masks = generate_white4(8, 3, 1);
  const auto a = measure_stack(x, masks, {}, MeasurementModel::discrete(), 1);
  const auto b = measure_stack(x, masks, {}, MeasurementModel::discrete(), 12345, 3);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].values, b[i].values);
    EXPECT_EQ(a[i].truncated_energy_fraction, 0.0);
    EXPECT_EQ(a[i].mask_id, masks[i].mask_index);
    EXPECT_EQ(a[i].values.rows(), 24u);
  }
  EXPECT_EQ(measure_stack(x, MaskSet{masks[0]}, {}, MeasurementModel::discrete()).size(), 1u);
}
