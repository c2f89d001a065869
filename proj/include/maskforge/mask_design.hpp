#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace maskforge {

// Ideal annular bandpass in normalized radial frequency. A bin with signed
// frequencies (kx, ky) on an n-point grid has radius
// r = pi * sqrt((kx/(n/2))^2 + (ky/(n/2))^2), clipped to pi; the filter passes
// low_cutoff <= r <= high_cutoff and blocks everything else (DC included).
struct SpectralFilter {
  double low_cutoff = std::numbers::pi / 5.0;
  double high_cutoff = std::numbers::pi / 3.0;

  void validate() const {
    if (!(low_cutoff > 0.0 && low_cutoff < high_cutoff && high_cutoff <= std::numbers::pi))
      throw ValidationError("invalid spectral filter: require 0 < low < high <= pi, got (" +
                            std::to_string(low_cutoff) + ", " + std::to_string(high_cutoff) + ")");
  }

  static double radius(std::size_t kr, std::size_t kc, std::size_t n) {
    const double half = static_cast<double>(n) / 2.0;
    const double fy = signed_frequency(kr, n) / half;
    const double fx = signed_frequency(kc, n) / half;
    return std::min(std::numbers::pi, std::numbers::pi * std::sqrt(fx * fx + fy * fy));
  }

  bool passes(double r) const { return r >= low_cutoff && r <= high_cutoff; }

  // 0/1 gain in DFT layout (DC at [0,0]).
  RealField gain(std::size_t n) const {
    RealField g(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) g(r, c) = passes(radius(r, c, n)) ? 1.0 : 0.0;
    return g;
  }

  friend bool operator==(const SpectralFilter&, const SpectralFilter&) = default;
};

struct DesignConfig {
  std::size_t n = 256;
  double alpha = 1e-4;
  double beta = 0.2;
  double delta = 1e-7;
  std::size_t max_iters_stage1 = 300;
  std::size_t g_loops = 2;
  std::uint32_t m_levels = 16;
  std::size_t l_masks = 3;
  SpectralFilter filter{};
  std::uint64_t rng_seed = 2023;

  void validate() const {
    if (n < 4) throw ValidationError("mask side n must be >= 4");
    if (n > 65535) throw ValidationError("mask side n too large");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be > 0");
    if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
    if (!(delta > 0.0)) throw ValidationError("delta must be > 0");
    if (max_iters_stage1 < 1) throw ValidationError("max_iters_stage1 must be >= 1");
    if (g_loops < 1) throw ValidationError("g_loops must be >= 1");
    if (l_masks < 1) throw ValidationError("l_masks must be >= 1");
    if (m_levels < 2 || m_levels > 256) throw ValidationError("m_levels must be in [2, 256]");
    filter.validate();
  }
};

// Stage-1 iterate: phases, multiplier, and the cached sum of e^{i psi}.
struct LagrangianState {
  PhaseField psi;
  cplx gamma{};
  cplx phasor_sum{};

  static LagrangianState from(PhaseField psi, cplx gamma = {}) {
    LagrangianState s{std::move(psi), gamma, {}};
    s.refresh();
    return s;
  }

  void refresh() {
    cplx sum{};
    for (double p : psi) sum += std::polar(1.0, p);
    phasor_sum = sum;
  }
};

// Bandpass template: inverse DFT of a unit-modulus white spectrum e^{iZ}
// times the filter gain, rescaled to unit RMS modulus. Z is drawn in raster
// order over the centered (DC-in-the-middle) spectrum.
inline ComplexField generate_template(std::size_t n, const SpectralFilter& filter,
                                      std::uint64_t seed) {
  if (n < 4) throw ValidationError("template side n must be >= 4");
  filter.validate();
  const RealField gain = filter.gain(n);
  bool any = false;
  for (double g : gain) any = any || g > 0.0;
  if (!any) throw ValidationError("empty passband");

  Rng rng(seed);
  ComplexField spectrum(n, n);
  const std::size_t half = n / 2;
  for (std::size_t rc = 0; rc < n; ++rc) {
    const std::size_t r = (rc + n - half) % n;
    for (std::size_t cc = 0; cc < n; ++cc) {
      const std::size_t c = (cc + n - half) % n;
      const double z = rng.uniform_phase();
      spectrum(r, c) = gain(r, c) * std::polar(1.0, z);
    }
  }
  ComplexField t = idft2(spectrum);
  const double rms = std::sqrt(sum_norm(t) / static_cast<double>(t.size()));
  for (auto& v : t) v /= rms;
  return t;
}

// Augmented Lagrangian
//   1/2 ||e^{i psi} - T||^2 + alpha/2 |S|^2 + Re(S conj(gamma)),  S = sum e^{i psi},
// using the cached phasor sum of `state`.
inline double lagrangian_value(const LagrangianState& state, const ComplexField& templ,
                               double alpha) {
  double mse = 0.0;
  for (std::size_t i = 0; i < templ.size(); ++i)
    mse += std::norm(std::polar(1.0, state.psi[i]) - templ[i]);
  const cplx s = state.phasor_sum;
  return 0.5 * mse + 0.5 * alpha * std::norm(s) + (s * std::conj(state.gamma)).real();
}

// Per-pixel derivative of lagrangian_value with respect to psi. The sum over
// all other pixels is taken as phasor_sum - e^{i psi_jk}.
inline RealField gradient(const LagrangianState& state, const ComplexField& templ, double alpha) {
  RealField g(templ.rows(), templ.cols());
  const cplx s = state.phasor_sum;
  const cplx gam = state.gamma;
  for (std::size_t i = 0; i < templ.size(); ++i) {
    const double sp = std::sin(state.psi[i]);
    const double cp = std::cos(state.psi[i]);
    const cplx excl = s - cplx(cp, sp);
    const double mse = templ[i].real() * sp - templ[i].imag() * cp;
    const double con = -(gam.real() * sp - gam.imag() * cp) -
                       alpha * (sp * excl.real() - cp * excl.imag());
    g[i] = mse + con;
  }
  return g;
}

struct Stage1Result {
  PhaseField psi;
  cplx gamma{};
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

// Gradient descent on psi with a multiplier step after every field update.
// Starts from psi = angle(template), gamma = 0.
inline Stage1Result stage1_optimize(const ComplexField& templ, const DesignConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.beta > 0.0 && cfg.delta > 0.0))
    throw ValidationError("stage 1 requires alpha, beta, delta > 0");
  const double n2 = static_cast<double>(templ.size());
  LagrangianState state = LagrangianState::from(angle(templ));
  Stage1Result res;
  for (std::size_t it = 1; it <= cfg.max_iters_stage1; ++it) {
    const RealField g = gradient(state, templ, cfg.alpha);
    double change = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double step = cfg.beta * g[i];
      state.psi[i] -= step;
      change += step * step;
    }
    state.refresh();
    state.gamma += cfg.alpha * state.phasor_sum;
    const double obj = lagrangian_value(state, templ, cfg.alpha);
    if (!std::isfinite(obj) || !std::isfinite(change))
      throw NumericalError("stage 1 diverged at iteration " + std::to_string(it));
    res.objective_trace.push_back(obj);
    res.iterations = it;
    if (change / n2 < cfg.delta) {
      res.converged = true;
      break;
    }
  }
  res.psi = std::move(state.psi);
  res.gamma = state.gamma;
  return res;
}

// Observer hook for stage 2: called after every pixel update with the loop
// number (1-based), the pixel, and the current phase field.
struct Stage2Step {
  std::size_t loop;
  std::size_t row;
  std::size_t col;
  const PhaseField& phases;
};
using Stage2Observer = std::function<void(const Stage2Step&)>;

// Raster-order coordinate descent onto the codebook, minimizing
//   1/2 ||e^{i psi} - T||^2 + alpha/2 |S + gamma/alpha|^2
// one pixel at a time with gamma fixed. For candidate u_m = e^{i c_m} the
// pixel-dependent part reduces to Re(conj(alpha*S_excl + gamma - T_jk) u_m).
inline QuantizedMask stage2_quantize(const PhaseField& psi, cplx gamma, const ComplexField& templ,
                                     const DesignConfig& cfg,
                                     const Stage2Observer& observer = {}) {
  if (!psi.same_shape(templ)) throw ValidationError("stage 2: phase/template shape mismatch");
  const Codebook cb = Codebook::uniform(cfg.m_levels);
  std::vector<cplx> words(cb.levels);
  for (std::size_t m = 0; m < words.size(); ++m) words[m] = std::polar(1.0, cb.entries[m]);

  PhaseField current = psi;
  Grid<std::uint16_t> idx(psi.rows(), psi.cols(), 0);
  ComplexField phasor = unit_phasors(current);
  for (std::size_t g = 1; g <= cfg.g_loops; ++g) {
    cplx sum{};
    for (const auto& u : phasor) sum += u;
    for (std::size_t r = 0; r < psi.rows(); ++r) {
      for (std::size_t c = 0; c < psi.cols(); ++c) {
        const std::size_t i = r * psi.cols() + c;
        const cplx excl = sum - phasor[i];
        const cplx v = cfg.alpha * excl + gamma - templ[i];
        std::size_t best = 0;
        double best_val = (std::conj(v) * words[0]).real();
        for (std::size_t m = 1; m < words.size(); ++m) {
          const double val = (std::conj(v) * words[m]).real();
          if (val < best_val) {
            best_val = val;
            best = m;
          }
        }
        idx[i] = static_cast<std::uint16_t>(best);
        current[i] = cb.entries[best];
        phasor[i] = words[best];
        sum = excl + phasor[i];
        if (observer) observer(Stage2Step{g, r, c, current});
      }
    }
  }
  return QuantizedMask{std::move(idx), cb, 1, 0};
}

struct MaskDesignReport {
  QuantizedMask mask;
  std::size_t stage1_iterations = 0;
  bool stage1_converged = false;
  cplx gamma{};
  double continuous_dc = 0.0;  // |sum e^{i psi}| / N^2 after stage 1
  double quantized_dc = 0.0;   // same after stage 2
};

inline double normalized_dc(const PhaseField& psi) {
  cplx s{};
  for (double p : psi) s += std::polar(1.0, p);
  return std::abs(s) / static_cast<double>(psi.size());
}

inline double normalized_dc(const QuantizedMask& mask) { return normalized_dc(mask.phases()); }

// Designs mask l (1-based) from its own template drawn with seed rng_seed + l.
inline MaskDesignReport design_single(const DesignConfig& cfg, std::size_t l) {
  const std::uint64_t seed = cfg.rng_seed + l;
  try {
    const ComplexField templ = generate_template(cfg.n, cfg.filter, seed);
    Stage1Result s1 = stage1_optimize(templ, cfg);
    MaskDesignReport rep;
    rep.mask = stage2_quantize(s1.psi, s1.gamma, templ, cfg);
    rep.mask.mask_index = static_cast<std::uint32_t>(l);
    rep.mask.seed = seed;
    rep.stage1_iterations = s1.iterations;
    rep.stage1_converged = s1.converged;
    rep.gamma = s1.gamma;
    rep.continuous_dc = normalized_dc(s1.psi);
    rep.quantized_dc = normalized_dc(rep.mask);
    return rep;
  } catch (const NumericalError& e) {
    throw NumericalError("mask " + std::to_string(l) + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("mask " + std::to_string(l) + ": " + e.what());
  }
}

inline std::vector<MaskDesignReport> design_optmask_detailed(const DesignConfig& cfg,
                                                             unsigned threads = 1) {
  cfg.validate();
  std::vector<MaskDesignReport> out(cfg.l_masks);
  parallel_for(cfg.l_masks, threads, [&](std::size_t i) { out[i] = design_single(cfg, i + 1); });
  return out;
}

// Two-stage design of L masks.
inline MaskSet design_optmask(const DesignConfig& cfg, unsigned threads = 1) {
  MaskSet masks;
  for (auto& rep : design_optmask_detailed(cfg, threads)) masks.push_back(std::move(rep.mask));
  return masks;
}

}  // namespace maskforge
