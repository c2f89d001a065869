#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "harness.hpp"
#include "io.hpp"

#ifndef MASKFORGE_VERSION
#define MASKFORGE_VERSION "0.1.0"
#endif
#ifndef MASKFORGE_GIT_REVISION
#define MASKFORGE_GIT_REVISION "unknown"
#endif

namespace maskforge::commands {

namespace fs = std::filesystem;

inline std::string code_version() { return std::string(MASKFORGE_VERSION) + "+" + MASKFORGE_GIT_REVISION; }

// CSV field formatting: shortest round-trip doubles, "inf"/"nan" sentinels.
inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return io::format_double(v);
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + fields[i];
    text_ += "\n";
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

// Tracks inputs, seeds, and output hashes; every output file goes through
// write() so the manifest always matches what is on disk.
class Manifest {
 public:
  Manifest(std::string command, fs::path out_dir) : out_(std::move(out_dir)) {
    doc_["command"] = std::move(command);
    doc_["code_version"] = code_version();
    doc_["inputs"] = nlohmann::json::object();
    doc_["seeds"] = nlohmann::json::object();
    doc_["outputs"] = nlohmann::json::object();
    fs::create_directories(out_);
  }

  const fs::path& dir() const { return out_; }

  void input_file(const fs::path& p) {
    doc_["inputs"][p.string()] = io::sha256_hex(io::read_file(p));
  }
  void input_value(const std::string& key, const std::string& value) { doc_["inputs"][key] = value; }
  void seed(const std::string& key, std::uint64_t v) { doc_["seeds"][key] = v; }
  void config(const ExperimentConfig& c) { doc_["config"] = config::to_ini(c); }

  void write(const fs::path& rel, const std::string& bytes) {
    io::write_file_atomic(out_ / rel, bytes);
    doc_["outputs"][rel.generic_string()] = io::sha256_hex(bytes);
  }

  void finish() { io::write_file_atomic(out_ / "manifest.json", doc_.dump(2) + "\n"); }

 private:
  fs::path out_;
  nlohmann::json doc_;
};

inline std::string mask_filename(std::uint32_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mask_%02u.omsk", id);
  return buf;
}

inline std::string measurement_filename(std::uint32_t id, const char* ext = "omsi") {
  char buf[40];
  std::snprintf(buf, sizeof buf, "measurement_%02u.%s", id, ext);
  return buf;
}

inline std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ValidationError("no " + ext + " files in " + dir.string());
  return out;
}

inline MaskSet load_masks(const fs::path& dir, Manifest* man = nullptr) {
  MaskSet masks;
  for (const auto& p : list_files(dir, ".omsk")) {
    masks.push_back(io::read_omsk(p));
    if (man) man->input_file(p);
  }
  const std::size_t n = masks.front().n();
  for (const auto& m : masks)
    if (m.n() != n) throw ValidationError("masks in " + dir.string() + " differ in size");
  return masks;
}

inline MeasurementStack load_measurements(const fs::path& dir, Manifest* man = nullptr) {
  MeasurementStack out;
  for (const auto& p : list_files(dir, ".omsi")) {
    out.push_back(io::read_omsi(p).measurement);
    if (man) man->input_file(p);
  }
  return out;
}

// Masks are written in the order given; measurements are matched by mask id.
inline MaskSet match_masks(const MaskSet& masks, const MeasurementStack& meas) {
  MaskSet out;
  for (const auto& m : meas) {
    auto it = std::find_if(masks.begin(), masks.end(), [&](const QuantizedMask& q) { return q.mask_index == m.mask_id; });
    if (it == masks.end()) throw ValidationError("no mask with id " + std::to_string(m.mask_id));
    out.push_back(*it);
  }
  return out;
}

inline void write_masks(Manifest& man, const fs::path& sub, const MaskSet& masks) {
  for (const auto& m : masks) man.write(sub / mask_filename(m.mask_index), io::encode_omsk(m));
}

inline void write_measurements(Manifest& man, const fs::path& sub, const MeasurementStack& meas,
                               std::uint64_t noise_seed) {
  for (const auto& m : meas) {
    man.write(sub / measurement_filename(m.mask_id), io::encode_omsi(m, noise_seed + m.mask_id));
    man.write(sub / measurement_filename(m.mask_id, "pgm"), io::encode_pgm16(m.values));
  }
}

inline void write_estimate(Manifest& man, const fs::path& stem, const ComplexField& estimate,
                           const ComplexField* truth = nullptr) {
  const ComplexField shown = truth ? global_phase_align(estimate, *truth).aligned : estimate;
  RealField re(shown.rows(), shown.cols()), im(shown.rows(), shown.cols());
  for (std::size_t i = 0; i < shown.size(); ++i) {
    re[i] = shown[i].real();
    im[i] = shown[i].imag();
  }
  fs::path r = stem, i = stem, p = stem;
  r += ".re.f64";
  i += ".im.f64";
  p += ".phase.pgm";
  man.write(r, io::encode_raw_f64(re));
  man.write(i, io::encode_raw_f64(im));
  man.write(p, io::encode_phase_pgm8(shown));
}

inline void apply_cli_fidelity(ExperimentConfig& cfg, const std::optional<Fidelity>& f) {
  if (f) config::set_fidelity(cfg, *f);
}

// ---- design -----------------------------------------------------------------

inline void design(const ExperimentConfig& cfg, const fs::path& out, unsigned threads,
                   std::ostream& log = std::cout) {
  cfg.design.validate();
  Manifest man("design", out);
  man.config(cfg);
  man.seed("design.seed", cfg.design.rng_seed);
  const auto reports = design_optmask_detailed(cfg.design, threads);
  Csv csv({"mask_id", "seed", "stage1_iterations", "stage1_converged", "continuous_dc", "quantized_dc"});
  for (const auto& r : reports) {
    man.write(mask_filename(r.mask.mask_index), io::encode_omsk(r.mask));
    csv.row({std::to_string(r.mask.mask_index), std::to_string(r.mask.seed), std::to_string(r.stage1_iterations),
             r.stage1_converged ? "1" : "0", csv_num(r.continuous_dc), csv_num(r.quantized_dc)});
    log << "mask " << r.mask.mask_index << ": stage1 iterations " << r.stage1_iterations
        << (r.stage1_converged ? "" : " (not converged)") << ", |sum e^(i psi)|/N^2 continuous "
        << csv_num(r.continuous_dc) << ", quantized " << csv_num(r.quantized_dc) << "\n";
  }
  man.write("design.cfg", config::design_ini(cfg.design));
  man.write("design_report.csv", csv.str());
  man.finish();
}

// ---- gen-baseline -----------------------------------------------------------

inline BaselineKind parse_baseline_kind(const std::string& s) {
  if (s == "white4") return BaselineKind::White4;
  if (s == "white16") return BaselineKind::White16;
  if (s == "green") return BaselineKind::GreenBinaryApprox;
  throw ValidationError("unknown baseline kind '" + s + "' (expected white4, white16, green)");
}

inline void gen_baseline(const ExperimentConfig& cfg, BaselineKind kind, const fs::path& out,
                         std::ostream& log = std::cout) {
  if (cfg.design.n < 4) throw ValidationError("mask side n must be >= 4");
  if (cfg.design.l_masks < 1) throw ValidationError("l_masks must be >= 1");
  Manifest man("gen-baseline", out);
  man.config(cfg);
  man.input_value("kind", to_string(kind));
  man.seed("baseline.seed", baseline_seed_for(cfg, kind));
  const MaskSet masks = make_baseline(cfg, kind, cfg.design.n, cfg.design.l_masks);
  write_masks(man, "", masks);
  for (const auto& m : masks)
    log << to_string(kind) << " mask " << m.mask_index << ": |sum T|/N^2 " << csv_num(normalized_dc(m)) << "\n";
  man.finish();
}

// ---- simulate ---------------------------------------------------------------

inline void simulate(const ExperimentConfig& cfg, const fs::path& masks_dir, const std::string& image,
                     const fs::path& out, unsigned threads, std::ostream& log = std::cout) {
  Manifest man("simulate", out);
  man.config(cfg);
  const MaskSet masks = load_masks(masks_dir, &man);
  const std::size_t n = masks.front().n();
  cfg.model.validate(n);
  cfg.geometry.validate(n);
  if (!images::is_builtin(image)) man.input_file(image);
  man.input_value("image", image);
  man.seed("noise_seed", cfg.noise_seed);
  const ComplexField x = phase_object(load_image(image, n));
  const MeasurementStack meas = measure_stack(x, masks, cfg.geometry, cfg.model, cfg.noise_seed, threads);
  write_measurements(man, "", meas, cfg.noise_seed);
  Csv csv({"mask_id", "eta", "truncated_energy_fraction"});
  for (const auto& m : meas) {
    csv.row({std::to_string(m.mask_id), csv_num(eta(m.values)), csv_num(m.truncated_energy_fraction)});
    log << "mask " << m.mask_id << ": eta " << csv_num(eta(m.values)) << ", truncated "
        << csv_num(m.truncated_energy_fraction) << "\n";
  }
  man.write("measurements.csv", csv.str());
  man.finish();
}

// ---- reconstruct ------------------------------------------------------------

inline void reconstruct(const ExperimentConfig& cfg, const fs::path& masks_dir, const fs::path& meas_dir,
                        const std::optional<std::string>& truth_image, const fs::path& out,
                        std::ostream& log = std::cout) {
  cfg.solver.validate();
  Manifest man("reconstruct", out);
  man.config(cfg);
  man.seed("solver.seed", cfg.solver.seed);
  const MaskSet all = load_masks(masks_dir, &man);
  const MeasurementStack meas = load_measurements(meas_dir, &man);
  const MaskSet masks = match_masks(all, meas);
  SolverConfig sc = cfg.solver;
  sc.track_objective = true;
  const ReconResult r = tv_map_admm(meas, masks, sc);
  Csv trace({"iteration", "objective", "residual"});
  for (std::size_t k = 0; k < r.iterations; ++k)
    trace.row({std::to_string(k + 1), csv_num(k < r.objective_trace.size() ? r.objective_trace[k] : NAN),
               csv_num(k < r.residual_trace.size() ? r.residual_trace[k] : NAN)});
  man.write("trace.csv", trace.str());
  std::optional<ComplexField> truth;
  if (truth_image) {
    if (!images::is_builtin(*truth_image)) man.input_file(*truth_image);
    man.input_value("truth_image", *truth_image);
    truth = phase_object(load_image(*truth_image, masks.front().n()));
    log << "psnr_phase " << csv_num(psnr_phase(*truth, r.estimate)) << " dB, ssim_phase "
        << csv_num(ssim_phase(*truth, r.estimate)) << "\n";
  }
  write_estimate(man, "estimate", r.estimate, truth ? &*truth : nullptr);
  log << "iterations " << r.iterations << ", final residual "
      << csv_num(r.residual_trace.empty() ? NAN : r.residual_trace.back()) << "\n";
  man.finish();
}

// ---- evaluate ---------------------------------------------------------------

inline const std::vector<std::string> kMetricsHeader{"scheme", "mask_id", "trial", "eta", "entropy",
                                                     "psnr_db", "ssim", "truncated_energy_fraction"};

// Metrics of an estimate (raw re/im pair at `estimate_stem`) against a truth
// image. Mask and measurement directories, when given, fill the per-mask
// columns.
inline void evaluate(const ExperimentConfig& cfg, const fs::path& estimate_stem, const std::string& truth_image,
                     const std::optional<fs::path>& masks_dir, const std::optional<fs::path>& meas_dir,
                     const std::string& scheme, const fs::path& out, std::ostream& log = std::cout) {
  Manifest man("evaluate", out);
  man.config(cfg);
  fs::path re = estimate_stem, im = estimate_stem;
  re += ".re.f64";
  im += ".im.f64";
  man.input_file(re);
  man.input_file(im);
  const ComplexField est = io::read_complex_raw(estimate_stem);
  if (!images::is_builtin(truth_image)) man.input_file(truth_image);
  man.input_value("truth_image", truth_image);
  const ComplexField x = phase_object(load_image(truth_image, est.rows()));
  const double p = psnr_phase(x, est), s = ssim_phase(x, est);

  MaskSet masks;
  MeasurementStack meas;
  if (masks_dir) masks = load_masks(*masks_dir, &man);
  if (meas_dir) meas = load_measurements(*meas_dir, &man);
  Csv csv(kMetricsHeader);
  if (masks.empty() && meas.empty()) {
    csv.row({scheme, "0", "0", "nan", "nan", csv_num(p), csv_num(s), "nan"});
  } else {
    std::vector<std::uint32_t> ids;
    for (const auto& m : meas) ids.push_back(m.mask_id);
    for (const auto& m : masks)
      if (std::find(ids.begin(), ids.end(), m.mask_index) == ids.end()) ids.push_back(m.mask_index);
    std::sort(ids.begin(), ids.end());
    for (auto id : ids) {
      std::string e = "nan", ent = "nan", tr = "nan";
      for (const auto& m : meas)
        if (m.mask_id == id) {
          e = csv_num(eta(m.values));
          tr = csv_num(m.truncated_energy_fraction);
        }
      for (const auto& m : masks)
        if (m.mask_index == id && m.n() % entropy_block_for(cfg, m) == 0)
          ent = csv_num(local_entropy(m, entropy_block_for(cfg, m)));
      csv.row({scheme, std::to_string(id), "0", e, ent, csv_num(p), csv_num(s), tr});
    }
  }
  man.write("metrics.csv", csv.str());
  log << "psnr_phase " << csv_num(p) << " dB, ssim_phase " << csv_num(s) << "\n";
  man.finish();
}

// ---- sweeps -----------------------------------------------------------------

inline QuantSweepResult sweep_quant(const ExperimentConfig& cfg, const fs::path& out,
                                    std::ostream& log = std::cout) {
  cfg.validate();
  Manifest man("sweep-quant", out);
  man.config(cfg);
  man.seed("design.seed", cfg.design.rng_seed);
  const QuantSweepResult res = sweep_quantization(cfg);
  Csv csv({"levels", "eta", "hf_axis_power_db", "entropy"});
  std::vector<std::string> head{"fx"};
  for (const auto& r : res.rows) {
    const std::string label = r.levels ? std::to_string(r.levels) : "unquantized";
    csv.row({label, csv_num(r.eta), csv_num(r.hf_axis_power_db), csv_num(r.entropy)});
    head.push_back(r.levels ? "m" + std::to_string(r.levels) + "_db" : "unquantized_db");
    log << "levels " << label << ": eta " << csv_num(r.eta) << ", high-frequency axis power "
        << csv_num(r.hf_axis_power_db) << " dB\n";
  }
  Csv axis(head);
  for (std::size_t c = 0; c < res.axis_frequency.size(); ++c) {
    std::vector<std::string> row{csv_num(res.axis_frequency[c])};
    for (const auto& r : res.rows) row.push_back(csv_num(r.axis_power_db[c]));
    axis.row(row);
  }
  man.write("quant_sweep.csv", csv.str());
  man.write("axis_power.csv", axis.str());
  man.finish();
  return res;
}

inline std::vector<CutoffRow> sweep_cutoffs_cmd(const ExperimentConfig& cfg, const fs::path& out, unsigned threads,
                                                std::ostream& log = std::cout) {
  cfg.validate();
  Manifest man("sweep-cutoffs", out);
  man.config(cfg);
  man.seed("design.seed", cfg.design.rng_seed);
  man.seed("baseline.seed", cfg.baseline_seed);
  if (!images::is_builtin(cfg.cutoff_image)) man.input_file(cfg.cutoff_image);
  const auto rows = sweep_cutoffs(cfg, threads);
  Csv csv({"scheme", "low_cutoff", "high_cutoff", "eta_mean", "eta_min", "eta_max", "entropy"});
  for (const auto& r : rows) {
    csv.row({r.scheme, csv_num(r.filter.low_cutoff), csv_num(r.filter.high_cutoff), csv_num(r.eta_mean),
             csv_num(r.eta_min), csv_num(r.eta_max), csv_num(r.entropy_mean)});
    log << r.scheme << " (" << csv_num(r.filter.low_cutoff) << ", " << csv_num(r.filter.high_cutoff)
        << "): mean eta " << csv_num(r.eta_mean) << ", entropy " << csv_num(r.entropy_mean) << "\n";
  }
  man.write("cutoffs.csv", csv.str());
  man.finish();
  return rows;
}

inline std::vector<MeasurementCountRow> sweep_measurements_cmd(const ExperimentConfig& cfg, const fs::path& out,
                                                               unsigned threads, std::ostream& log = std::cout) {
  cfg.validate();
  Manifest man("sweep-measurements", out);
  man.config(cfg);
  man.seed("design.seed", cfg.design.rng_seed);
  man.seed("noise_seed", cfg.noise_seed);
  man.seed("solver.seed", cfg.solver.seed);
  for (const auto& src : cfg.images)
    if (!images::is_builtin(src)) man.input_file(src);
  const auto rows = sweep_measurements(cfg, threads);
  Csv trials({"image", "k", "trial", "tv_weight", "psnr_db", "ssim"});
  Csv summary({"image", "k", "psnr_mean", "psnr_min", "psnr_max", "ssim_mean", "ssim_min", "ssim_max"});
  for (const auto& r : rows) {
    double pmin = INFINITY, pmax = -INFINITY, smin = INFINITY, smax = -INFINITY;
    for (const auto& t : r.trials) {
      trials.row({r.image, std::to_string(r.k), std::to_string(t.trial), csv_num(t.tv_weight), csv_num(t.psnr_db),
                  csv_num(t.ssim)});
      pmin = std::min(pmin, t.psnr_db);
      pmax = std::max(pmax, t.psnr_db);
      smin = std::min(smin, t.ssim);
      smax = std::max(smax, t.ssim);
    }
    summary.row({r.image, std::to_string(r.k), csv_num(r.mean_psnr()), csv_num(pmin), csv_num(pmax),
                 csv_num(r.mean_ssim()), csv_num(smin), csv_num(smax)});
    log << r.image << " k=" << r.k << ": mean psnr " << csv_num(r.mean_psnr()) << " dB, mean ssim "
        << csv_num(r.mean_ssim()) << "\n";
  }
  std::size_t idx = 0;
  for (const auto& src : cfg.images) {
    const ComplexField x = phase_object(load_image(src, cfg.design.n));
    for (std::size_t k = 1; k <= cfg.max_measurements; ++k, ++idx) {
      const auto& r = rows[idx];
      write_estimate(man, fs::path("recon") / (r.image + "_k" + std::to_string(k)),
                     r.trials[best_trial_index(r.trials)].recon.estimate, &x);
    }
  }
  man.write("measurements_trials.csv", trials.str());
  man.write("measurements_summary.csv", summary.str());
  man.finish();
  return rows;
}

// ---- compare ----------------------------------------------------------------

inline std::string metrics_csv(const CompareResult& res, const std::string& image) {
  Csv csv(kMetricsHeader);
  for (const auto& r : res.results) {
    if (r.image != image) continue;
    for (const auto& t : r.trials)
      for (const auto& m : r.mask_stats)
        csv.row({r.scheme, std::to_string(m.mask_id), std::to_string(t.trial), csv_num(m.eta), csv_num(m.entropy),
                 csv_num(t.psnr_db), csv_num(t.ssim), csv_num(m.truncated_energy_fraction)});
  }
  return csv.str();
}

inline CompareResult compare(const ExperimentConfig& cfg, const fs::path& out, unsigned threads,
                             std::ostream& log = std::cout) {
  cfg.validate();
  Manifest man("compare", out);
  man.config(cfg);
  man.seed("design.seed", cfg.design.rng_seed);
  man.seed("baseline.seed", cfg.baseline_seed);
  man.seed("noise_seed", cfg.noise_seed);
  man.seed("solver.seed", cfg.solver.seed);
  for (const auto& src : cfg.images)
    if (!images::is_builtin(src)) man.input_file(src);
  const CompareResult res = compare_schemes(cfg, threads);

  Csv summary({"image", "scheme", "fidelity", "eta_mean", "entropy_mean", "truncated_energy_fraction_mean",
               "best_trial", "best_tv_weight", "best_psnr_db", "best_ssim"});
  std::vector<std::string> written_masks;
  std::vector<std::string> labels;
  for (const auto& r : res.results) {
    if (std::find(written_masks.begin(), written_masks.end(), r.scheme) == written_masks.end()) {
      write_masks(man, fs::path("masks") / r.scheme, r.masks);
      written_masks.push_back(r.scheme);
    }
    if (std::find(labels.begin(), labels.end(), r.image) == labels.end()) labels.push_back(r.image);
    write_measurements(man, fs::path("measurements") / r.image / r.scheme, r.measurements, cfg.noise_seed);
    const auto& b = r.trials[r.best];
    summary.row({r.image, r.scheme, to_string(res.fidelity), csv_num(r.mean_eta()), csv_num(r.mean_entropy()),
                 csv_num(r.mean_truncated()), std::to_string(b.trial), csv_num(b.tv_weight), csv_num(b.psnr_db),
                 csv_num(b.ssim)});
    log << r.image << " " << r.scheme << ": mean eta " << csv_num(r.mean_eta()) << ", truncated "
        << csv_num(r.mean_truncated()) << ", best psnr " << csv_num(b.psnr_db) << " dB, ssim " << csv_num(b.ssim)
        << "\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    man.write("metrics_" + labels[i] + ".csv", metrics_csv(res, labels[i]));
    const ComplexField x = phase_object(load_image(cfg.images[i], cfg.design.n));
    for (const auto& r : res.results)
      if (r.image == labels[i])
        write_estimate(man, fs::path("recon") / (r.image + "_" + r.scheme), r.trials[r.best].recon.estimate, &x);
  }
  man.write("compare_summary.csv", summary.str());
  man.finish();
  return res;
}

}  // namespace maskforge::commands
