// Acceptance checks. One PASS/FAIL line per criterion; exit status is nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maskforge/maskforge.hpp"
#include "oracles.hpp"

using namespace maskforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double a) {
  char b[64];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

std::vector<QuantizedMask> g_masks;  // everything generated, for the entropy bound

void remember(const MaskSet& m) { g_masks.insert(g_masks.end(), m.begin(), m.end()); }

Outcome gradient_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  const double h = 1e-6, alpha = 1e-4;
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const ComplexField t = oracle::random_field(16, 16, gen);
    PhaseField psi = oracle::random_phase(16, 16, gen);
    std::normal_distribution<double> nd;
    const cplx gamma(nd(gen), nd(gen));
    const RealField g = gradient(LagrangianState::from(psi, gamma), t, alpha);
    double md = 0, mr = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double p0 = psi[i];
      psi[i] = p0 + h;
      const double fp = oracle::lagrangian(psi, gamma, t, alpha);
      psi[i] = p0 - h;
      const double fm = oracle::lagrangian(psi, gamma, t, alpha);
      psi[i] = p0;
      const double fd = (fp - fm) / (2 * h);
      md = std::max(md, std::abs(fd - g[i]));
      mr = std::max(mr, std::abs(fd));
    }
    worst = std::max(worst, md / mr);
  }
  const double secs = seconds_since(t0);
  o.check(worst < 1e-5, fmt("max rel err %.2e", worst));
  o.check(secs < 10, fmt("%.2f s", secs));
  return o;
}

Outcome forward_oracle() {
  Outcome o;
  std::mt19937_64 gen(2);
  double worst = 0;
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t pad : {n, n + 1, 2 * n, 3 * n})
      for (int rep = 0; rep < 3; ++rep) {
        const ComplexField x = oracle::random_field(n, n, gen);
        const QuantizedMask m = oracle::random_mask(n, 16, gen);
        const auto got = cdp_intensity_discrete(x, m, pad, pad);
        ComplexField y = m.transmission();
        for (std::size_t i = 0; i < y.size(); ++i) y[i] *= x[i];
        const RealField want = oracle::dft_intensity(y, pad, pad);
        for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got.values[i] - want[i]));
      }
  o.check(worst < 1e-9, fmt("direct-sum max abs err %.2e", worst));
  const ComplexField x = oracle::random_field(256, 256, gen);
  const QuantizedMask m = oracle::random_mask(256, 16, gen);
  const auto meas = cdp_intensity_discrete(x, m, 768, 768);
  double s = 0;
  for (double v : meas.values) s += v;
  const double rel = std::abs(s - sum_norm(x)) / sum_norm(x);
  o.check(rel < 1e-10, fmt("Parseval rel err %.2e at n=256", rel));
  return o;
}

Outcome quantizer_descent() {
  Outcome o;
  std::size_t checked = 0, violations = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DesignConfig cfg;
    cfg.n = 16;
    cfg.m_levels = 16;
    const ComplexField t = generate_template(16, cfg.filter, 100 + seed);
    const auto s1 = stage1_optimize(t, cfg);
    double prev = INFINITY;
    const QuantizedMask q = stage2_quantize(s1.psi, s1.gamma, t, cfg, [&](const Stage2Step& st) {
      const double v = oracle::quant_objective(st.phases, s1.gamma, t, cfg.alpha);
      if (st.loop >= 2) {
        ++checked;
        if (v > prev + 1e-12 * std::abs(prev)) ++violations;
      }
      prev = v;
    });
    remember({q});
  }
  o.check(violations == 0 && checked == 10 * 256,
          std::to_string(checked) + " updates checked, " + std::to_string(violations) + " increases");
  return o;
}

Outcome dc_suppression() {
  Outcome o;
  const DesignConfig cfg;
  const auto reports = design_optmask_detailed(cfg);
  double cont = 0, quant = 0;
  for (const auto& r : reports) {
    cont = std::max(cont, r.continuous_dc);
    quant = std::max(quant, r.quantized_dc);
    remember({r.mask});
  }
  double white = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MaskSet w = generate_white16(cfg.n, 1, 9000 + s);
    white += normalized_dc(w[0]) / 20;
    remember(w);
  }
  o.check(cont <= 1e-3, fmt("continuous %.2e", cont));
  o.check(quant <= 1e-2, fmt("quantized %.2e", quant));
  o.check(white >= 3 * cont && white >= 3 * quant, fmt("white16 mean %.2e", white));
  return o;
}

Outcome quantization_trend(const ExperimentConfig& base) {
  Outcome o;
  const auto t0 = Clock::now();
  ExperimentConfig c = base;
  c.quant_levels = {2, 4, 16};
  const auto r = sweep_quantization(c);
  const double secs = seconds_since(t0);
  const double e0 = r.at(0).eta, e2 = r.at(2).eta, e4 = r.at(4).eta, e16 = r.at(16).eta;
  const double gap = r.at(2).hf_axis_power_db - r.at(16).hf_axis_power_db;
  std::ostringstream s;
  s << "eta M2 " << e2 << ", M4 " << e4 << ", M16 " << e16 << ", unquantized " << e0;
  o.check(e2 > e4 && e4 > e16, s.str());
  o.check(std::abs(e16 - e0) <= 0.2 * e0, fmt("M16 vs unquantized %.3f", std::abs(e16 - e0) / e0));
  o.check(gap >= 5.0, fmt("HF axis gap M2-M16 %.2f dB", gap));
  o.check(secs < 300, fmt("%.1f s", secs));
  return o;
}

Outcome cutoff_trend(const ExperimentConfig& base) {
  Outcome o;
  ExperimentConfig c = base;
  c.cutoffs = {{std::numbers::pi / 4, std::numbers::pi / 2}, {std::numbers::pi / 5, std::numbers::pi / 2}};
  c.cutoff_masks = 10;
  const auto rows = sweep_cutoffs(c);
  const auto &a = rows[0], &b = rows[1], &g = rows[2];
  std::ostringstream s;
  s << "eta pi/4 " << a.eta_mean << " -> pi/5 " << b.eta_mean;
  o.check(b.eta_mean < a.eta_mean, s.str());
  std::ostringstream e;
  e << "entropy pi/4 " << a.entropy_mean << ", pi/5 " << b.entropy_mean << ", green " << g.entropy_mean;
  o.check(std::min(a.entropy_mean, b.entropy_mean) - g.entropy_mean >= 2.0, e.str());
  o.check(b.entropy_mean < a.entropy_mean, "entropy falls with lower cutoff");
  return o;
}

Outcome noiseless_recovery() {
  Outcome o;
  const auto t0 = Clock::now();
  const ComplexField x = phase_object(images::cells(32));
  const MaskSet masks = generate_white4(32, 4, 100);
  remember(masks);
  const auto meas = measure_stack(x, masks, {}, MeasurementModel::discrete());
  SolverConfig sc;
  sc.iterations = 300;
  sc.tv_weight = 0;
  const auto r = tv_map_admm(meas, masks, sc);
  const double p = psnr_phase(x, r.estimate), secs = seconds_since(t0);
  o.check(p > 40, fmt("phase PSNR %.2f dB", p));
  o.check(secs < 120, fmt("%.1f s", secs));
  return o;
}

Outcome end_to_end(const ExperimentConfig& base) {
  Outcome o;
  const auto t0 = Clock::now();
  ExperimentConfig c = base;
  c.design.n = 128;
  c.design.l_masks = 3;
  c.schemes = {"optmask", "green", "white16"};
  c.images = {"cells", "natural"};
  c.trials = 3;
  c.model = MeasurementModel::optical(4, 12);
  c.geometry.fill_factor = 0.93;
  const CompareResult opt = compare_schemes(c);
  config::set_fidelity(c, Fidelity::DiscreteDFT);
  const CompareResult dft = compare_schemes(c);
  for (const auto& r : opt.results) remember(r.masks);
  const double po = opt.mean_best_psnr("optmask"), pg = opt.mean_best_psnr("green"),
               pw = opt.mean_best_psnr("white16");
  const double gap_opt = po - pw, gap_dft = dft.mean_best_psnr("optmask") - dft.mean_best_psnr("white16");
  std::ostringstream s1, s2, s3;
  s1 << "optical OptMask " << po << " > Green " << pg;
  s2 << "Green > White16 " << pw;
  s3 << "OptMask-White16 gap optical " << gap_opt << " dB, dft " << gap_dft << " dB";
  o.check(po > pg, s1.str());
  o.check(pg > pw, s2.str());
  o.check(gap_opt > 0 && gap_dft <= 0.5 * gap_opt, s3.str());
  const double secs = seconds_since(t0);
  o.check(secs < 1800, fmt("%.0f s", secs));
  return o;
}

Outcome metric_identities() {
  Outcome o;
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  const ComplexField x = phase_object(images::natural(64));
  bool inf_ok = true;
  for (int k = 0; k < 10; ++k) {
    ComplexField y = x;
    const cplx rot = std::polar(1.0, u(gen));
    for (auto& v : y) v *= rot;
    inf_ok = inf_ok && std::isinf(psnr_phase(x, y)) && psnr_phase(x, y) > 0;
  }
  o.check(inf_ok, "psnr sentinel for 10 global phases");
  o.check(ssim_phase(x, x) == 1.0, "ssim(x, x) = 1");
  double worst = 0;
  std::exponential_distribution<double> ed;
  for (int k = 0; k < 20; ++k) {
    RealField s(32, 32);
    for (auto& v : s) v = ed(gen);
    const double scale = std::exp(u(gen) * 3);
    worst = std::max(worst, std::abs(eta(s) - eta(map_grid(s, [&](double v) { return scale * v; }))));
  }
  o.check(worst < 1e-12, fmt("eta scale invariance %.1e", worst));
  std::size_t over = 0;
  for (const auto& m : g_masks) {
    const std::size_t n = m.n();
    const std::size_t b = n % 32 == 0 ? 32 : (n % 16 == 0 ? 16 : n);
    if (local_entropy(m, b) > std::log2(m.codebook.levels) + 1e-12) ++over;
  }
  o.check(over == 0, std::to_string(g_masks.size()) + " masks within log2 M");
  return o;
}

std::string read_all(const fs::path& root, const fs::path& rel) { return io::read_file(root / rel); }

Outcome determinism() {
  Outcome o;
  ExperimentConfig c;
  c.design.n = 32;
  c.design.l_masks = 2;
  c.schemes = {"optmask", "green", "white16", "white4"};
  c.images = {"cells"};
  c.trials = 2;
  c.solver.iterations = 40;
  c.entropy_block = 16;
  c.binary_entropy_block = 16;
  const fs::path base = fs::temp_directory_path() / "maskforge_acceptance";
  fs::remove_all(base);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    commands::design(c, base / run / "design", 1, sink);
    commands::compare(c, base / run / "compare", 1, sink);
  }
  std::size_t files = 0, mismatched = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".omsk" && ext != ".omsi" && ext != ".csv") continue;
    const fs::path rel = fs::relative(e.path(), base / "a");
    ++files;
    if (!fs::exists(base / "b" / rel) || read_all(base / "a", rel) != read_all(base / "b", rel)) ++mismatched;
  }
  o.check(files > 0 && mismatched == 0,
          std::to_string(files) + " OMSK/OMSI/CSV files compared, " + std::to_string(mismatched) + " differ");
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  const ExperimentConfig defaults;  // n = 256 design, default filters
  struct Item {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Item> items{
      {1, "gradient oracle", gradient_oracle},
      {2, "forward-model oracle", forward_oracle},
      {3, "quantizer descent", quantizer_descent},
      {4, "DC suppression", dc_suppression},
      {5, "quantization-level trend", [&] { return quantization_trend(defaults); }},
      {6, "cutoff trends", [&] { return cutoff_trend(defaults); }},
      {7, "noiseless recovery", noiseless_recovery},
      {8, "end-to-end mechanism", [&] { return end_to_end(defaults); }},
      {9, "metric identities", metric_identities},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& it : items) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = it.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", it.id, it.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(items.size()) - failed, items.size());
  return failed == 0 ? 0 : 1;
}
