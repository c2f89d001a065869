#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace maskforge {

struct OpticalGeometry {
  double wavelength = 632.8e-9;  // HeNe
  double focal_length = 0.05645; // gives a 762-pixel measurement with the pitches below
  double slm_pitch = 8e-6;
  double sensor_pitch = 5.86e-6;
  double fill_factor = 0.93;

  // round(lambda f / (d p)): sensor pixels spanned by the 0-th order.
  std::size_t measurement_side() const {
    return static_cast<std::size_t>(std::lround(wavelength * focal_length / (sensor_pitch * slm_pitch)));
  }

  void validate(std::size_t n) const {
    if (!(wavelength > 0 && focal_length > 0 && slm_pitch > 0 && sensor_pitch > 0))
      throw ValidationError("optical geometry lengths must be positive");
    if (!(fill_factor > 0.0 && fill_factor <= 1.0))
      throw ValidationError("fill_factor must be in (0, 1]");
    if (measurement_side() < n)
      throw ValidationError("optical geometry gives a measurement side smaller than the mask");
  }
};

enum class Fidelity { DiscreteDFT, OpticalEmulation };

inline std::string to_string(Fidelity f) {
  return f == Fidelity::DiscreteDFT ? "dft" : "optical";
}

struct MeasurementModel {
  Fidelity fidelity = Fidelity::DiscreteDFT;
  std::uint32_t supersample = 1;
  std::uint32_t sensor_bits = 0;  // 0 = ideal sensor
  double photon_scale = 0.0;      // expected photons at the peak; 0 = noiseless
  std::size_t pad_rows = 0;       // 0 = 3n
  std::size_t pad_cols = 0;

  std::size_t rows_for(std::size_t n) const { return pad_rows ? pad_rows : 3 * n; }
  std::size_t cols_for(std::size_t n) const { return pad_cols ? pad_cols : 3 * n; }

  void validate(std::size_t n) const {
    if (fidelity == Fidelity::DiscreteDFT && supersample != 1)
      throw ValidationError("DiscreteDFT fidelity requires supersample = 1");
    if (fidelity == Fidelity::OpticalEmulation && supersample < 2)
      throw ValidationError("OpticalEmulation fidelity requires supersample >= 2");
    if (rows_for(n) < n || cols_for(n) < n) throw ValidationError("pad_to must be >= n");
    if (sensor_bits > 32) throw ValidationError("sensor_bits must be <= 32");
    if (photon_scale < 0.0) throw ValidationError("photon_scale must be >= 0");
  }

  static MeasurementModel discrete() { return {}; }
  static MeasurementModel optical(std::uint32_t s, std::uint32_t bits = 0) {
    MeasurementModel m;
    m.fidelity = Fidelity::OpticalEmulation;
    m.supersample = s;
    m.sensor_bits = bits;
    return m;
  }
};

struct IntensityMeasurement {
  RealField values;  // DFT layout, DC at [0,0]
  std::uint32_t mask_id = 0;
  MeasurementModel model;
  double truncated_energy_fraction = 0.0;
};

using MeasurementStack = std::vector<IntensityMeasurement>;

inline constexpr std::size_t kDefaultDftLimit = 8192;

// Largest side of the supersampled transform; MASKFORGE_DFT_LIMIT overrides.
inline std::size_t dft_size_limit() {
  if (const char* env = std::getenv("MASKFORGE_DFT_LIMIT")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultDftLimit;
}

// |DFT_{M1 x M2}(x o T)|^2 with 1/sqrt(M1 M2) normalization, x o T
// zero-padded at the top-left corner.
inline IntensityMeasurement cdp_intensity_discrete(const ComplexField& x, const QuantizedMask& mask,
                                                   std::size_t pad_rows, std::size_t pad_cols) {
  if (!x.same_shape(mask.indices)) throw ValidationError("object and mask dimensions differ");
  if (pad_rows < x.rows() || pad_cols < x.cols()) throw ValidationError("pad_to must be >= n");
  ComplexField masked = mask.transmission();
  for (std::size_t i = 0; i < masked.size(); ++i) masked[i] *= x[i];
  IntensityMeasurement m;
  m.values = abs2(dft2(masked, pad_rows, pad_cols));
  m.mask_id = mask.mask_index;
  m.model = MeasurementModel::discrete();
  m.model.pad_rows = pad_rows;
  m.model.pad_cols = pad_cols;
  m.truncated_energy_fraction = 0.0;
  return m;
}

// Poisson noise (peak scaled to photon_scale), then quantization to
// sensor_bits with full scale at the noiseless peak and saturation above it.
// Values stay in the units of the input.
inline void apply_sensor(RealField& values, const MeasurementModel& model, std::uint64_t noise_seed) {
  const double peak = *std::max_element(values.begin(), values.end());
  if (!(peak > 0.0)) return;
  if (model.photon_scale > 0.0) {
    Rng rng(noise_seed);
    const double k = model.photon_scale / peak;
    for (auto& v : values) v = rng.poisson(v * k) / k;
  }
  if (model.sensor_bits > 0) {
    const double levels = std::ldexp(1.0, static_cast<int>(model.sensor_bits)) - 1.0;
    for (auto& v : values) {
      const double q = std::min(levels, std::round(v / peak * levels));
      v = q * peak / levels;
    }
  }
}

namespace detail {

// Fraction of fine sub-pixel r in [r, r+1) covered by the centered modulated
// interval of width s*sqrt(fill) inside an s-wide SLM pixel.
inline std::vector<double> subpixel_coverage(std::uint32_t s, double fill) {
  const double a = s * std::sqrt(fill);
  const double lo = (s - a) / 2.0, hi = (s + a) / 2.0;
  std::vector<double> cov(s);
  for (std::uint32_t r = 0; r < s; ++r)
    cov[r] = std::max(0.0, std::min(r + 1.0, hi) - std::max<double>(r, lo));
  return cov;
}

}  // namespace detail

// Supersampled optical emulation of one CDP measurement.
//
// Each SLM pixel becomes an s x s block. Inside the centered modulated area
// (fraction fill_factor of the pixel) the field is x*T; in the dead-zone
// border the SLM applies no phase, so the field is |x|. Partially covered
// sub-pixels take the area-weighted mix. The block field is zero-padded to
// (s*M1) x (s*M2), so the 0-th diffraction order is exactly the centered
// M1 x M2 window of its DFT. The transform is scaled by 1/(s^2 sqrt(M1 M2)),
// which makes the window equal the discrete measurement times the pixel
// aperture envelope (1 at DC) when fill_factor = 1.
inline IntensityMeasurement cdp_intensity_optical(const ComplexField& x, const QuantizedMask& mask,
                                                  const OpticalGeometry& geom,
                                                  const MeasurementModel& model,
                                                  std::uint64_t noise_seed = 0) {
  if (!x.same_shape(mask.indices)) throw ValidationError("object and mask dimensions differ");
  if (model.fidelity != Fidelity::OpticalEmulation)
    throw ValidationError("cdp_intensity_optical requires OpticalEmulation fidelity");
  const std::size_t n = x.rows();
  model.validate(n);
  geom.validate(n);
  const std::uint32_t s = model.supersample;
  const std::size_t p1 = model.rows_for(n), p2 = model.cols_for(n);
  const std::size_t f1 = s * p1, f2 = s * p2;
  const std::size_t limit = dft_size_limit();
  if (f1 > limit || f2 > limit)
    throw ValidationError("emulation too large: " + std::to_string(f1) + "x" + std::to_string(f2) +
                          " exceeds limit " + std::to_string(limit));

  const auto cov = detail::subpixel_coverage(s, geom.fill_factor);
  const ComplexField t = mask.transmission();
  Fft2d fft(f1, f2);
  auto buf = fft.buffer();
  std::fill(buf.begin(), buf.end(), cplx{});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const cplx mod = x(j, k) * t(j, k);
      const double bare = std::abs(x(j, k));
      for (std::uint32_t r1 = 0; r1 < s; ++r1)
        for (std::uint32_t r2 = 0; r2 < s; ++r2) {
          const double w = cov[r1] * cov[r2];
          fft.at(j * s + r1, k * s + r2) = w * mod + (1.0 - w) * bare;
        }
    }
  fft.forward();
  const double scale = 1.0 / (double(s) * double(s) * std::sqrt(double(p1) * double(p2)));

  double total = 0.0;
  for (const auto& v : buf) total += std::norm(v);
  total *= scale * scale;

  IntensityMeasurement m;
  m.values = RealField(p1, p2);
  double central = 0.0;
  for (std::size_t r = 0; r < p1; ++r) {
    const long kr = signed_frequency(r, p1);
    const std::size_t fr = static_cast<std::size_t>((kr + static_cast<long>(f1)) % static_cast<long>(f1));
    for (std::size_t c = 0; c < p2; ++c) {
      const long kc = signed_frequency(c, p2);
      const std::size_t fc = static_cast<std::size_t>((kc + static_cast<long>(f2)) % static_cast<long>(f2));
      const double v = std::norm(fft.at(fr, fc)) * scale * scale;
      m.values(r, c) = v;
      central += v;
    }
  }
  m.truncated_energy_fraction = total > 0.0 ? std::clamp(1.0 - central / total, 0.0, 1.0) : 0.0;
  m.mask_id = mask.mask_index;
  m.model = model;
  m.model.pad_rows = p1;
  m.model.pad_cols = p2;
  apply_sensor(m.values, model, noise_seed);
  return m;
}

// One measurement per mask. Mask l draws its noise from noise_seed + mask_index.
// The sensor stage (noise, bit depth) applies for both fidelities.
inline MeasurementStack measure_stack(const ComplexField& x, const MaskSet& masks,
                                      const OpticalGeometry& geom, const MeasurementModel& model,
                                      std::uint64_t noise_seed = 0, unsigned threads = 1) {
  if (x.rows() != x.cols()) throw ValidationError("object must be square");
  model.validate(x.rows());
  MeasurementStack out(masks.size());
  parallel_for(masks.size(), threads, [&](std::size_t i) {
    const std::uint64_t seed = noise_seed + masks[i].mask_index;
    if (model.fidelity == Fidelity::DiscreteDFT) {
      IntensityMeasurement m =
          cdp_intensity_discrete(x, masks[i], model.rows_for(x.rows()), model.cols_for(x.cols()));
      m.model = model;
      m.model.pad_rows = m.values.rows();
      m.model.pad_cols = m.values.cols();
      apply_sensor(m.values, model, seed);
      out[i] = std::move(m);
    } else {
      out[i] = cdp_intensity_optical(x, masks[i], geom, model, seed);
    }
  });
  return out;
}

}  // namespace maskforge
