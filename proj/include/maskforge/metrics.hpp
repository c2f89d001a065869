#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "mask.hpp"

namespace maskforge {

// Normalized frequency of DFT bin k on an n-point axis: k' / (n/2), where k'
// is the signed index in [-n/2, n/2). Nyquist is at magnitude 1.
inline double normalized_frequency(std::size_t k, std::size_t n) {
  return static_cast<double>(signed_frequency(k, n)) / (static_cast<double>(n) / 2.0);
}

// High-frequency energy fraction of a power spectrum given in DFT layout
// (DC at [0,0]): energy in bins with max(|fx|, |fy|) >= threshold over the
// total. The low-frequency region is the open central square.
inline double eta(const RealField& spectrum, double threshold = 0.8) {
  double total = 0.0, high = 0.0;
  for (std::size_t r = 0; r < spectrum.rows(); ++r) {
    const double fy = std::abs(normalized_frequency(r, spectrum.rows()));
    for (std::size_t c = 0; c < spectrum.cols(); ++c) {
      const double v = spectrum(r, c);
      if (v < 0.0) throw ValidationError("eta: spectrum must be nonnegative");
      const double fx = std::abs(normalized_frequency(c, spectrum.cols()));
      total += v;
      if (std::max(fx, fy) >= threshold) high += v;
    }
  }
  if (!(total > 0.0)) throw ValidationError("empty spectrum");
  return high / total;
}

struct SpectrumStats {
  double eta = 0.0;
  std::vector<double> radial_power;   // mean power per unit-width radial bin
  std::vector<double> axis_power_db;  // 10 log10 of the fy = 0 row, centered order
};

inline std::size_t radial_bin(std::size_t r, std::size_t c, std::size_t rows, std::size_t cols) {
  const double fy = static_cast<double>(signed_frequency(r, rows));
  const double fx = static_cast<double>(signed_frequency(c, cols));
  return static_cast<std::size_t>(std::lround(std::sqrt(fx * fx + fy * fy)));
}

inline SpectrumStats spectrum_stats(const RealField& spectrum, double threshold = 0.8) {
  SpectrumStats st;
  st.eta = eta(spectrum, threshold);
  const std::size_t rows = spectrum.rows(), cols = spectrum.cols();
  const std::size_t nbins = radial_bin(rows / 2, cols / 2, rows, cols) + 1;
  std::vector<double> sum(nbins, 0.0);
  std::vector<std::size_t> count(nbins, 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto b = radial_bin(r, c, rows, cols);
      sum[b] += spectrum(r, c);
      ++count[b];
    }
  st.radial_power.resize(nbins);
  for (std::size_t b = 0; b < nbins; ++b)
    st.radial_power[b] = count[b] ? sum[b] / static_cast<double>(count[b]) : 0.0;
  st.axis_power_db.resize(cols);
  const std::size_t half = cols / 2;
  for (std::size_t cc = 0; cc < cols; ++cc) {
    const double p = spectrum(0, (cc + cols - half) % cols);
    st.axis_power_db[cc] = 10.0 * std::log10(std::max(p, std::numeric_limits<double>::min()));
  }
  return st;
}

// Mean power (dB) along the fy = 0 row over bins with |fx| >= threshold.
inline double axis_high_frequency_power_db(const RealField& spectrum, double threshold = 0.8) {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t c = 0; c < spectrum.cols(); ++c)
    if (std::abs(normalized_frequency(c, spectrum.cols())) >= threshold) {
      s += spectrum(0, c);
      ++k;
    }
  return 10.0 * std::log10(std::max(s / static_cast<double>(k), std::numeric_limits<double>::min()));
}

inline double shannon_entropy(const std::vector<std::size_t>& histogram) {
  std::size_t total = 0;
  for (auto h : histogram) total += h;
  if (total == 0) return 0.0;
  double e = 0.0;
  for (auto h : histogram) {
    if (h == 0) continue;
    const double p = static_cast<double>(h) / static_cast<double>(total);
    e -= p * std::log2(p);
  }
  return e;
}

// Mean base-2 Shannon entropy of codeword symbols over non-overlapping
// b x b blocks.
inline double local_entropy(const QuantizedMask& mask, std::size_t block) {
  const std::size_t rows = mask.indices.rows(), cols = mask.indices.cols();
  if (block == 0 || rows % block != 0 || cols % block != 0) throw ValidationError("block mismatch");
  double acc = 0.0;
  std::size_t blocks = 0;
  std::vector<std::size_t> hist(mask.codebook.levels);
  for (std::size_t br = 0; br < rows; br += block)
    for (std::size_t bc = 0; bc < cols; bc += block) {
      std::fill(hist.begin(), hist.end(), 0);
      for (std::size_t r = br; r < br + block; ++r)
        for (std::size_t c = bc; c < bc + block; ++c) ++hist[mask.indices(r, c)];
      acc += shannon_entropy(hist);
      ++blocks;
    }
  return acc / static_cast<double>(blocks);
}

struct Alignment {
  ComplexField aligned;
  double theta = 0.0;
};

// Least-squares unimodular alignment of x onto ref: x e^{-i theta} with
// theta = arg(sum conj(ref) x).
inline Alignment global_phase_align(const ComplexField& x, const ComplexField& ref) {
  if (!x.same_shape(ref)) throw ValidationError("global_phase_align: shape mismatch");
  cplx acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(ref[i]) * x[i];
  if (acc == cplx{}) {
    double ref_energy = sum_norm(ref);
    if (ref_energy == 0.0) throw ValidationError("global_phase_align: reference is zero");
  }
  Alignment a{x, std::arg(acc)};
  const cplx rot = std::polar(1.0, -a.theta);
  for (auto& v : a.aligned) v *= rot;
  return a;
}

// Wraps to [-pi, pi).
inline double wrap_pi(double d) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  d = std::fmod(d + std::numbers::pi, two_pi);
  if (d < 0.0) d += two_pi;
  return d - std::numbers::pi;
}

// Wraps to [0, 2 pi). Values within 1e-9 rad below 2 pi map to 0 so that
// rounding in an alignment cannot flip a zero phase to the top of the range.
inline double wrap_2pi(double p) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  p = std::fmod(p, two_pi);
  if (p < 0.0) p += two_pi;
  if (p >= two_pi - 1e-9) p = 0.0;
  return p;
}

// Mean squared circular phase difference after removing the global phase.
inline double mse_phase(const ComplexField& x, const ComplexField& x_hat) {
  const Alignment a = global_phase_align(x_hat, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = wrap_pi(std::arg(a.aligned[i]) - std::arg(x[i]));
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

// Phase errors below this RMS level (1e-12 rad) are treated as exact.
inline constexpr double kExactPhaseMse = 1e-24;

// 10 log10((2 pi)^2 / MSE_phase); +inf when the phases agree to rounding.
inline double psnr_phase(const ComplexField& x, const ComplexField& x_hat) {
  if (!x.same_shape(x_hat)) throw ValidationError("psnr_phase: shape mismatch");
  const double mse = mse_phase(x, x_hat);
  if (mse <= kExactPhaseMse) return std::numeric_limits<double>::infinity();
  const double peak = 2.0 * std::numbers::pi;
  return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size * size));
  const int h = size / 2;
  double s = 0.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double v = std::exp(-((i - h) * (i - h) + (j - h) * (j - h)) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(i * size + j)] = v;
      s += v;
    }
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace detail

// SSIM with an 11x11 Gaussian window (sigma 1.5) over the valid region;
// constants K1 = 0.01, K2 = 0.03 for the given dynamic range.
inline double ssim(const RealField& a, const RealField& b, double dynamic_range) {
  if (!a.same_shape(b)) throw ValidationError("ssim: shape mismatch");
  constexpr int win = 11;
  const auto w = detail::gaussian_window(win, 1.5);
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  if (a.rows() < static_cast<std::size_t>(win) || a.cols() < static_cast<std::size_t>(win))
    throw ValidationError("ssim: image smaller than the 11x11 window");
  const std::size_t out_r = a.rows() - win + 1, out_c = a.cols() - win + 1;
  double acc = 0.0;
  for (std::size_t r = 0; r < out_r; ++r)
    for (std::size_t c = 0; c < out_c; ++c) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double wt = w[static_cast<std::size_t>(i * win + j)];
          const double va = a(r + i, c + j), vb = b(r + i, c + j);
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  return acc / static_cast<double>(out_r * out_c);
}

// SSIM of the phase maps (wrapped to [0, 2 pi)) after aligning x_hat to x.
inline double ssim_phase(const ComplexField& x, const ComplexField& x_hat) {
  if (!x.same_shape(x_hat)) throw ValidationError("ssim_phase: shape mismatch");
  const Alignment a = global_phase_align(x_hat, x);
  RealField pa(x.rows(), x.cols()), pb(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    pa[i] = wrap_2pi(std::arg(x[i]));
    pb[i] = wrap_2pi(std::arg(a.aligned[i]));
  }
  return ssim(pa, pb, 2.0 * std::numbers::pi);
}

}  // namespace maskforge
