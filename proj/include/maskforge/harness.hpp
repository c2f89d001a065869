#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "baseline_masks.hpp"
#include "config.hpp"
#include "images.hpp"
#include "io.hpp"
#include "mask_design.hpp"
#include "metrics.hpp"
#include "optics_sim.hpp"
#include "parallel.hpp"
#include "reconstruct.hpp"

namespace maskforge {

enum class Scheme { OptMask, Green, White16, White4 };

inline Scheme parse_scheme(const std::string& s) {
  if (s == "optmask" || s == "opt") return Scheme::OptMask;
  if (s == "green") return Scheme::Green;
  if (s == "white16") return Scheme::White16;
  if (s == "white4") return Scheme::White4;
  throw ValidationError("unknown scheme '" + s + "' (expected optmask, green, white16, white4)");
}

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::OptMask: return "optmask";
    case Scheme::Green: return "green";
    case Scheme::White16: return "white16";
    case Scheme::White4: return "white4";
  }
  return "?";
}

// Baseline kinds draw from disjoint seed ranges above baseline_seed.
inline std::uint64_t baseline_seed_for(const ExperimentConfig& cfg, BaselineKind k) {
  switch (k) {
    case BaselineKind::GreenBinaryApprox: return cfg.baseline_seed;
    case BaselineKind::White16: return cfg.baseline_seed + 100;
    case BaselineKind::White4: return cfg.baseline_seed + 200;
  }
  return cfg.baseline_seed;
}

inline MaskSet make_baseline(const ExperimentConfig& cfg, BaselineKind k, std::size_t n, std::size_t l) {
  const auto seed = baseline_seed_for(cfg, k);
  if (k == BaselineKind::GreenBinaryApprox) return generate_green_binary_approx(n, l, seed, cfg.green_filter);
  return generate_baseline(k, n, l, seed);
}

inline MaskSet make_scheme_masks(const ExperimentConfig& cfg, Scheme s, std::size_t l_masks,
                                 unsigned threads = 1) {
  const std::size_t n = cfg.design.n;
  switch (s) {
    case Scheme::OptMask: {
      DesignConfig d = cfg.design;
      d.l_masks = l_masks;
      return design_optmask(d, threads);
    }
    case Scheme::Green: return make_baseline(cfg, BaselineKind::GreenBinaryApprox, n, l_masks);
    case Scheme::White16: return make_baseline(cfg, BaselineKind::White16, n, l_masks);
    case Scheme::White4: return make_baseline(cfg, BaselineKind::White4, n, l_masks);
  }
  throw ValidationError("unknown scheme");
}

// Built-in image name or a PGM path, resized to n x n, values in [0, 1].
inline RealField load_image(const std::string& source, std::size_t n) {
  if (images::is_builtin(source)) return images::builtin(source, n);
  if (!std::filesystem::exists(source))
    throw ValidationError("image '" + source + "' is neither a built-in name nor an existing file");
  RealField img = io::read_pgm(source);
  double mx = 0.0;
  for (double v : img) mx = std::max(mx, v);
  if (mx > 0.0)
    for (double& v : img) v /= mx;
  return resize(img, n);
}

inline std::string image_label(const std::string& source) {
  if (images::is_builtin(source)) return source;
  return std::filesystem::path(source).stem().string();
}

inline std::size_t entropy_block_for(const ExperimentConfig& cfg, const QuantizedMask& m) {
  return m.codebook.levels == 2 ? cfg.binary_entropy_block : cfg.entropy_block;
}

// ---- reconstruction trials --------------------------------------------------

struct TrialOutcome {
  std::size_t trial = 0;
  double tv_weight = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  ReconResult recon;
};

// One trial: random start seeded by solver.seed + trial, best PSNR over the
// tv grid.
inline TrialOutcome run_trial(const MeasurementStack& meas, const MaskSet& masks, const ComplexField& truth,
                              const ExperimentConfig& cfg, std::size_t trial) {
  TrialOutcome best;
  best.psnr_db = -std::numeric_limits<double>::infinity();
  bool first = true;
  for (double tv : cfg.effective_tv_grid()) {
    SolverConfig sc = cfg.solver;
    sc.tv_weight = tv;
    sc.seed = cfg.solver.seed + trial;
    ReconResult r = tv_map_admm(meas, masks, sc);
    const double p = psnr_phase(truth, r.estimate);
    if (first || p > best.psnr_db) {
      best.trial = trial;
      best.tv_weight = tv;
      best.psnr_db = p;
      best.ssim = ssim_phase(truth, r.estimate);
      best.recon = std::move(r);
      first = false;
    }
  }
  return best;
}

inline std::size_t best_trial_index(const std::vector<TrialOutcome>& trials) {
  std::size_t b = 0;
  for (std::size_t i = 1; i < trials.size(); ++i)
    if (trials[i].psnr_db > trials[b].psnr_db) b = i;
  return b;
}

inline std::vector<TrialOutcome> run_trials(const MeasurementStack& meas, const MaskSet& masks,
                                            const ComplexField& truth, const ExperimentConfig& cfg,
                                            unsigned threads) {
  std::vector<TrialOutcome> out(cfg.trials);
  parallel_for(cfg.trials, threads, [&](std::size_t t) { out[t] = run_trial(meas, masks, truth, cfg, t); });
  return out;
}

// ---- quantization sweep -----------------------------------------------------

struct QuantRow {
  std::uint32_t levels = 0;  // 0 = unquantized stage-1 phase
  double eta = 0.0;
  double hf_axis_power_db = 0.0;
  double entropy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> axis_power_db;
};

struct QuantSweepResult {
  std::size_t n = 0;
  std::vector<double> axis_frequency;  // normalized, centered order
  std::vector<QuantRow> rows;          // unquantized first, then cfg.quant_levels

  const QuantRow& at(std::uint32_t levels) const {
    for (const auto& r : rows)
      if (r.levels == levels) return r;
    throw ValidationError("quantization level " + std::to_string(levels) + " not in sweep");
  }
};

// One continuous design (stage 1) quantized at every configured level. Spectra
// are the mask's own n x n DFT power.
inline QuantSweepResult sweep_quantization(const ExperimentConfig& cfg) {
  DesignConfig d = cfg.design;
  d.filter = cfg.quant_filter;
  d.validate();
  const ComplexField templ = generate_template(d.n, d.filter, d.rng_seed + 1);
  const Stage1Result s1 = stage1_optimize(templ, d);

  QuantSweepResult res;
  res.n = d.n;
  for (std::size_t c = 0; c < d.n; ++c)
    res.axis_frequency.push_back(static_cast<double>(static_cast<long>(c) - static_cast<long>(d.n / 2)) /
                                 (static_cast<double>(d.n) / 2.0));
  auto row_for = [&](const ComplexField& t, std::uint32_t levels) {
    const RealField ps = power_spectrum(t);
    const SpectrumStats st = spectrum_stats(ps);
    QuantRow r;
    r.levels = levels;
    r.eta = st.eta;
    r.hf_axis_power_db = axis_high_frequency_power_db(ps);
    r.axis_power_db = st.axis_power_db;
    return r;
  };
  res.rows.push_back(row_for(unit_phasors(s1.psi), 0));
  for (std::uint32_t m : cfg.quant_levels) {
    DesignConfig dm = d;
    dm.m_levels = m;
    QuantizedMask q = stage2_quantize(s1.psi, s1.gamma, templ, dm);
    QuantRow r = row_for(q.transmission(), m);
    r.entropy = local_entropy(q, entropy_block_for(cfg, q));
    res.rows.push_back(std::move(r));
  }
  return res;
}

// ---- cutoff sweep -----------------------------------------------------------

struct CutoffRow {
  std::string scheme;  // "optmask" rows carry a filter; "green" is the binary reference
  SpectralFilter filter{};
  double eta_mean = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  double entropy_mean = 0.0;
};

inline CutoffRow summarize_masks(const std::string& scheme, const SpectralFilter& f, const MaskSet& masks,
                                 const ComplexField& x, const ExperimentConfig& cfg) {
  CutoffRow row{scheme, f, 0.0, std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), 0.0};
  const std::size_t n = x.rows();
  for (const auto& m : masks) {
    const auto meas = cdp_intensity_discrete(x, m, cfg.model.rows_for(n), cfg.model.cols_for(n));
    const double e = eta(meas.values);
    row.eta_mean += e / static_cast<double>(masks.size());
    row.eta_min = std::min(row.eta_min, e);
    row.eta_max = std::max(row.eta_max, e);
    row.entropy_mean += local_entropy(m, entropy_block_for(cfg, m)) / static_cast<double>(masks.size());
  }
  return row;
}

// Per passband: cutoff_masks designed masks, mean eta of the DFT intensities
// of the masked test image, and mean local entropy. A green-binary row is
// appended for reference.
inline std::vector<CutoffRow> sweep_cutoffs(const ExperimentConfig& cfg, unsigned threads = 1) {
  const ComplexField x = phase_object(load_image(cfg.cutoff_image, cfg.design.n));
  std::vector<CutoffRow> rows;
  for (const auto& f : cfg.cutoffs) {
    DesignConfig d = cfg.design;
    d.filter = f;
    d.l_masks = cfg.cutoff_masks;
    rows.push_back(summarize_masks("optmask", f, design_optmask(d, threads), x, cfg));
  }
  const MaskSet green = make_baseline(cfg, BaselineKind::GreenBinaryApprox, cfg.design.n, cfg.cutoff_masks);
  rows.push_back(summarize_masks("green", cfg.green_filter, green, x, cfg));
  return rows;
}

// ---- measurement-count sweep ------------------------------------------------

struct MeasurementCountRow {
  std::string image;
  std::size_t k = 0;
  std::vector<TrialOutcome> trials;

  double mean_psnr() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.psnr_db;
    return s / static_cast<double>(trials.size());
  }
  double mean_ssim() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.ssim;
    return s / static_cast<double>(trials.size());
  }
};

// OptMask stack of max_measurements, reconstructed from its first k = 1..max.
inline std::vector<MeasurementCountRow> sweep_measurements(const ExperimentConfig& cfg, unsigned threads = 1) {
  const MaskSet masks = make_scheme_masks(cfg, Scheme::OptMask, cfg.max_measurements, threads);
  std::vector<MeasurementCountRow> rows;
  for (const auto& src : cfg.images) {
    const ComplexField x = phase_object(load_image(src, cfg.design.n));
    const MeasurementStack all = measure_stack(x, masks, cfg.geometry, cfg.model, cfg.noise_seed, threads);
    for (std::size_t k = 1; k <= cfg.max_measurements; ++k) {
      const MeasurementStack meas(all.begin(), all.begin() + static_cast<long>(k));
      const MaskSet sub(masks.begin(), masks.begin() + static_cast<long>(k));
      rows.push_back({image_label(src), k, run_trials(meas, sub, x, cfg, threads)});
    }
  }
  return rows;
}

// ---- scheme comparison ------------------------------------------------------

struct MaskStats {
  std::uint32_t mask_id = 0;
  double eta = 0.0;
  double entropy = 0.0;
  double truncated_energy_fraction = 0.0;
};

struct SchemeImageResult {
  std::string scheme;
  std::string image;
  MaskSet masks;
  MeasurementStack measurements;
  std::vector<MaskStats> mask_stats;
  std::vector<TrialOutcome> trials;
  std::size_t best = 0;

  double best_psnr() const { return trials[best].psnr_db; }
  double best_ssim() const { return trials[best].ssim; }
  double mean_eta() const {
    double s = 0.0;
    for (const auto& m : mask_stats) s += m.eta;
    return s / static_cast<double>(mask_stats.size());
  }
  double mean_truncated() const {
    double s = 0.0;
    for (const auto& m : mask_stats) s += m.truncated_energy_fraction;
    return s / static_cast<double>(mask_stats.size());
  }
  double mean_entropy() const {
    double s = 0.0;
    for (const auto& m : mask_stats) s += m.entropy;
    return s / static_cast<double>(mask_stats.size());
  }
};

struct CompareResult {
  Fidelity fidelity = Fidelity::OpticalEmulation;
  std::vector<SchemeImageResult> results;  // image-major, then scheme order

  const SchemeImageResult& get(const std::string& image, const std::string& scheme) const {
    for (const auto& r : results)
      if (r.image == image && r.scheme == scheme) return r;
    throw ValidationError("no result for " + scheme + " on " + image);
  }

  // Mean over images of the best-trial PSNR.
  double mean_best_psnr(const std::string& scheme) const {
    double s = 0.0;
    std::size_t k = 0;
    for (const auto& r : results)
      if (r.scheme == scheme) {
        s += r.best_psnr();
        ++k;
      }
    if (k == 0) throw ValidationError("scheme " + scheme + " not in comparison");
    return s / static_cast<double>(k);
  }
};

// Each scheme contributes design.l_masks masks; every configured image is
// measured under cfg.model and reconstructed cfg.trials times.
inline CompareResult compare_schemes(const ExperimentConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  std::vector<std::pair<std::string, MaskSet>> sets;
  for (const auto& s : cfg.schemes) {
    const Scheme sc = parse_scheme(s);
    sets.emplace_back(to_string(sc), make_scheme_masks(cfg, sc, cfg.design.l_masks, threads));
  }
  CompareResult out;
  out.fidelity = cfg.model.fidelity;
  for (const auto& src : cfg.images) {
    const ComplexField x = phase_object(load_image(src, cfg.design.n));
    for (const auto& [name, masks] : sets) {
      SchemeImageResult r;
      r.scheme = name;
      r.image = image_label(src);
      r.masks = masks;
      r.measurements = measure_stack(x, masks, cfg.geometry, cfg.model, cfg.noise_seed, threads);
      for (std::size_t i = 0; i < masks.size(); ++i)
        r.mask_stats.push_back({masks[i].mask_index, eta(r.measurements[i].values),
                                local_entropy(masks[i], entropy_block_for(cfg, masks[i])),
                                r.measurements[i].truncated_energy_fraction});
      r.trials = run_trials(r.measurements, masks, x, cfg, threads);
      r.best = best_trial_index(r.trials);
      out.results.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace maskforge
