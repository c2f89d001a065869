#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "optics_sim.hpp"
#include "rng.hpp"

namespace maskforge {

enum class InitKind { Random, Backprojection };

struct SolverConfig {
  double tv_weight = 0.0;
  double admm_rho = 1.0;
  std::size_t iterations = 200;
  InitKind init = InitKind::Backprojection;
  std::uint64_t seed = 1;
  bool track_objective = true;
  std::optional<ComplexField> initial_estimate;  // overrides `init` when set

  void validate() const {
    if (iterations < 1) throw ValidationError("solver iterations must be >= 1");
    if (!(tv_weight >= 0.0)) throw ValidationError("tv_weight must be >= 0");
    if (!(admm_rho > 0.0)) throw ValidationError("admm_rho must be > 0");
  }
};

struct ReconResult {
  ComplexField estimate;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;  // empty unless track_objective
  std::vector<double> residual_trace;   // ||(|Ax|^2 - X)|| / ||X|| over all masks
};

// Poisson negative log-likelihood 1/2 (|z|^2 - X log|z|^2), shifted so that
// each term is zero at |z|^2 = X.
inline double poisson_fidelity(double z2, double b) {
  if (b <= 0.0) return 0.5 * z2;
  const double zf = std::max(z2, std::numeric_limits<double>::min());
  return 0.5 * (zf - b - b * std::log(zf / b));
}

// Magnitude of argmin_z 1/2(|z|^2 - b log|z|^2) + rho/2 |z - w|^2; the phase
// of the minimizer is that of w.
inline double poisson_prox_magnitude(double w_abs, double b, double rho) {
  return (rho * w_abs + std::sqrt(rho * rho * w_abs * w_abs + 4.0 * (1.0 + rho) * b)) /
         (2.0 * (1.0 + rho));
}

namespace detail {

// Periodic forward differences along columns (h) and rows (v).
inline void forward_diff(const ComplexField& x, ComplexField& h, ComplexField& v) {
  const std::size_t n1 = x.rows(), n2 = x.cols();
  for (std::size_t r = 0; r < n1; ++r)
    for (std::size_t c = 0; c < n2; ++c) {
      h(r, c) = x(r, (c + 1) % n2) - x(r, c);
      v(r, c) = x((r + 1) % n1, c) - x(r, c);
    }
}

// Adjoint of forward_diff, accumulated into out.
inline void add_diff_adjoint(const ComplexField& h, const ComplexField& v, ComplexField& out) {
  const std::size_t n1 = h.rows(), n2 = h.cols();
  for (std::size_t r = 0; r < n1; ++r)
    for (std::size_t c = 0; c < n2; ++c)
      out(r, c) += h(r, (c + n2 - 1) % n2) - h(r, c) + v((r + n1 - 1) % n1, c) - v(r, c);
}

inline cplx shrink(cplx v, double t) {
  const double a = std::abs(v);
  return a > t ? v * (1.0 - t / a) : cplx{};
}

inline double anisotropic_tv(const ComplexField& x) {
  ComplexField h(x.rows(), x.cols()), v(x.rows(), x.cols());
  forward_diff(x, h, v);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(h[i]) + std::abs(v[i]);
  return s;
}

// A_l x = unitary DFT of the zero-padded x o T_l, and its adjoint.
class CdpOperator {
 public:
  CdpOperator(std::size_t n, std::size_t p1, std::size_t p2) : n_(n), fft_(p1, p2) {
    norm_ = 1.0 / std::sqrt(static_cast<double>(p1 * p2));
  }

  void apply(const ComplexField& x, const ComplexField& t, ComplexField& out) {
    auto b = fft_.buffer();
    std::fill(b.begin(), b.end(), cplx{});
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) fft_.at(r, c) = x(r, c) * t(r, c);
    fft_.forward();
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] * norm_;
  }

  // out += conj(T) o crop(F^H z)
  void add_adjoint(const ComplexField& z, const ComplexField& t, ComplexField& out) {
    auto b = fft_.buffer();
    std::copy(z.begin(), z.end(), b.begin());
    fft_.backward();
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) out(r, c) += std::conj(t(r, c)) * fft_.at(r, c) * norm_;
  }

 private:
  std::size_t n_;
  Fft2d fft_;
  double norm_;
};

}  // namespace detail

// TV-regularized Poisson-MAP phase retrieval by ADMM with splittings
// z_l = A_l x and g = grad x:
//   z-step:  per-element proximal map of the Poisson fidelity,
//   x-step:  (rho L + rho grad^H grad) x = rho sum A_l^H(z_l + u_l) + rho grad^H(g + mu),
//            diagonal in the DFT basis because |T_l| = 1,
//   g-step:  complex soft-thresholding with threshold tv_weight / rho.
inline ReconResult tv_map_admm(const MeasurementStack& measurements, const MaskSet& masks,
                               const SolverConfig& cfg) {
  cfg.validate();
  if (measurements.empty() || measurements.size() != masks.size())
    throw ValidationError("measurements and masks must be non-empty and of equal length");
  const std::size_t n = masks.front().n();
  const std::size_t p1 = measurements.front().values.rows();
  const std::size_t p2 = measurements.front().values.cols();
  double total_energy = 0.0, b_norm2 = 0.0;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (masks[l].n() != n || masks[l].indices.cols() != n)
      throw ValidationError("all masks must share one square size");
    const auto& vals = measurements[l].values;
    if (vals.rows() != p1 || vals.cols() != p2)
      throw ValidationError("all measurements must share one size");
    if (p1 < n || p2 < n) throw ValidationError("measurement smaller than mask");
    for (double v : vals) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("measurements must be finite and nonnegative");
      total_energy += v;
      b_norm2 += v * v;
    }
  }
  if (!(total_energy > 0.0)) throw ValidationError("degenerate measurements");

  const std::size_t nl = masks.size();
  const double rho = cfg.admm_rho;
  const bool use_tv = cfg.tv_weight > 0.0;
  std::vector<ComplexField> t(nl);
  for (std::size_t l = 0; l < nl; ++l) t[l] = masks[l].transmission();
  detail::CdpOperator op(n, p1, p2);

  // Initial estimate with the energy implied by Parseval.
  const double target = total_energy / static_cast<double>(nl);
  ComplexField x(n, n);
  if (cfg.initial_estimate) {
    if (cfg.initial_estimate->rows() != n || cfg.initial_estimate->cols() != n)
      throw ValidationError("initial estimate has the wrong size");
    x = *cfg.initial_estimate;
  } else {
    if (cfg.init == InitKind::Backprojection) {
      ComplexField amp(p1, p2);
      for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::sqrt(measurements[l].values[i]);
        op.add_adjoint(amp, t[l], x);
      }
    }
    double e = sum_norm(x);
    if (cfg.init == InitKind::Random || !(e > 0.0)) {
      Rng rng(cfg.seed);
      for (auto& v : x) v = std::polar(1.0, rng.uniform_phase());
      e = sum_norm(x);
    }
    const double s = std::sqrt(target / e);
    for (auto& v : x) v *= s;
  }

  std::vector<ComplexField> ax(nl, ComplexField(p1, p2)), z(nl, ComplexField(p1, p2)),
      u(nl, ComplexField(p1, p2, cplx{}));
  for (std::size_t l = 0; l < nl; ++l) op.apply(x, t[l], ax[l]);

  ComplexField gh, gv, mh, mv, dh, dv;
  std::vector<double> denom;
  std::optional<Fft2d> small_fft;
  if (use_tv) {
    gh = gv = mh = mv = dh = dv = ComplexField(n, n, cplx{});
    detail::forward_diff(x, gh, gv);
    small_fft.emplace(n, n);
    denom.resize(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double lap = 4.0 - 2.0 * std::cos(2.0 * std::numbers::pi * r / n) -
                           2.0 * std::cos(2.0 * std::numbers::pi * c / n);
        denom[r * n + c] = rho * (static_cast<double>(nl) + lap);
      }
  }

  ReconResult res;
  const double b_norm = std::sqrt(b_norm2);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    for (std::size_t l = 0; l < nl; ++l) {
      const auto& b = measurements[l].values;
      for (std::size_t i = 0; i < z[l].size(); ++i) {
        const cplx w = ax[l][i] - u[l][i];
        const double wa = std::abs(w);
        const double mag = poisson_prox_magnitude(wa, b[i], rho);
        z[l][i] = wa > 0.0 ? w * (mag / wa) : cplx(mag, 0.0);
      }
    }

    ComplexField rhs(n, n, cplx{});
    for (std::size_t l = 0; l < nl; ++l) {
      ComplexField zu(p1, p2);
      for (std::size_t i = 0; i < zu.size(); ++i) zu[i] = z[l][i] + u[l][i];
      op.add_adjoint(zu, t[l], rhs);
    }
    if (use_tv) {
      ComplexField sh(n, n), sv(n, n), tv_rhs(n, n, cplx{});
      for (std::size_t i = 0; i < sh.size(); ++i) {
        sh[i] = gh[i] + mh[i];
        sv[i] = gv[i] + mv[i];
      }
      detail::add_diff_adjoint(sh, sv, tv_rhs);
      Fft2d& f = *small_fft;
      for (std::size_t i = 0; i < rhs.size(); ++i) f.buffer()[i] = rho * (rhs[i] + tv_rhs[i]);
      f.forward();
      for (std::size_t i = 0; i < rhs.size(); ++i) f.buffer()[i] /= denom[i];
      f.backward();
      const double inv = 1.0 / static_cast<double>(n * n);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = f.buffer()[i] * inv;
    } else {
      const double inv = 1.0 / static_cast<double>(nl);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = rhs[i] * inv;
    }

    double fidelity = 0.0, resid2 = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
      op.apply(x, t[l], ax[l]);
      const auto& b = measurements[l].values;
      for (std::size_t i = 0; i < ax[l].size(); ++i) {
        u[l][i] += z[l][i] - ax[l][i];
        const double a2 = std::norm(ax[l][i]);
        fidelity += poisson_fidelity(a2, b[i]);
        resid2 += (a2 - b[i]) * (a2 - b[i]);
      }
    }
    if (!std::isfinite(fidelity) || !std::isfinite(sum_norm(x)))
      throw NumericalError("reconstruction diverged at iteration " + std::to_string(it));

    if (use_tv) {
      detail::forward_diff(x, dh, dv);
      const double thr = cfg.tv_weight / rho;
      for (std::size_t i = 0; i < dh.size(); ++i) {
        gh[i] = detail::shrink(dh[i] - mh[i], thr);
        gv[i] = detail::shrink(dv[i] - mv[i], thr);
        mh[i] += gh[i] - dh[i];
        mv[i] += gv[i] - dv[i];
      }
    }

    res.iterations = it;
    if (cfg.track_objective) {
      const double tv = use_tv ? cfg.tv_weight * detail::anisotropic_tv(x) : 0.0;
      res.objective_trace.push_back(tv + fidelity);
      res.residual_trace.push_back(std::sqrt(resid2) / b_norm);
    }
  }
  res.estimate = std::move(x);
  return res;
}

}  // namespace maskforge
