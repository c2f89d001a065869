#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "maskforge/maskforge.hpp"

namespace mf = maskforge;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::string> fidelity;
  unsigned threads = 1;
};

enum class SeedTarget { Design, Baseline, Noise, Solver, None };

mf::ExperimentConfig load_config(const Globals& g, SeedTarget target) {
  mf::ExperimentConfig cfg = g.config_path.empty() ? mf::ExperimentConfig{} : mf::config::load(g.config_path);
  if (g.fidelity) mf::config::set_fidelity(cfg, mf::config::parse_fidelity(*g.fidelity));
  if (g.seed) {
    switch (target) {
      case SeedTarget::Design: cfg.design.rng_seed = *g.seed; break;
      case SeedTarget::Baseline: cfg.baseline_seed = *g.seed; break;
      case SeedTarget::Noise: cfg.noise_seed = *g.seed; break;
      case SeedTarget::Solver: cfg.solver.seed = *g.seed; break;
      case SeedTarget::None: break;
    }
  }
  if (g.threads < 1) throw mf::ValidationError("--threads must be >= 1");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maskforge: phase-mask design, CDP simulation and reconstruction benchmarks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "override the command's primary seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--fidelity", g.fidelity, "measurement model")->check(CLI::IsMember({"dft", "optical"}));
  app.add_option("--threads", g.threads, "worker threads");

  auto* design = app.add_subcommand("design", "design OptMask phase masks");
  auto* baseline = app.add_subcommand("gen-baseline", "generate baseline masks");
  std::string kind = "white16";
  baseline->add_option("--kind", kind, "white4 | white16 | green")->check(CLI::IsMember({"white4", "white16", "green"}));

  auto* simulate = app.add_subcommand("simulate", "simulate CDP intensity measurements");
  std::string masks_dir, image = "cells", meas_dir, estimate, scheme = "unknown";
  std::optional<std::string> truth;
  simulate->add_option("--masks", masks_dir, "directory of .omsk masks")->required();
  simulate->add_option("--image", image, "built-in image name or PGM path");

  auto* recon = app.add_subcommand("reconstruct", "reconstruct from intensity measurements");
  recon->add_option("--masks", masks_dir, "directory of .omsk masks")->required();
  recon->add_option("--measurements", meas_dir, "directory of .omsi measurements")->required();
  recon->add_option("--image", truth, "ground-truth image for PSNR/SSIM reporting");

  auto* evaluate = app.add_subcommand("evaluate", "compute metrics for a reconstruction");
  std::optional<std::string> eval_masks, eval_meas;
  evaluate->add_option("--estimate", estimate, "estimate stem (reads STEM.re.f64 / STEM.im.f64)")->required();
  evaluate->add_option("--image", image, "ground-truth image")->required();
  evaluate->add_option("--masks", eval_masks, "mask directory for entropy");
  evaluate->add_option("--measurements", eval_meas, "measurement directory for eta and truncation");
  evaluate->add_option("--scheme", scheme, "scheme label for the CSV");

  auto* sq = app.add_subcommand("sweep-quant", "eta and axis power versus quantization levels");
  auto* sc = app.add_subcommand("sweep-cutoffs", "eta and entropy versus passband");
  auto* sm = app.add_subcommand("sweep-measurements", "reconstruction quality versus measurement count");
  auto* cmp = app.add_subcommand("compare", "compare masking schemes end to end");
  for (auto* s : app.get_subcommands({})) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    namespace cmd = mf::commands;
    if (*design) {
      cmd::design(load_config(g, SeedTarget::Design), g.out, g.threads);
    } else if (*baseline) {
      cmd::gen_baseline(load_config(g, SeedTarget::Baseline), cmd::parse_baseline_kind(kind), g.out);
    } else if (*simulate) {
      cmd::simulate(load_config(g, SeedTarget::Noise), masks_dir, image, g.out, g.threads);
    } else if (*recon) {
      cmd::reconstruct(load_config(g, SeedTarget::Solver), masks_dir, meas_dir, truth, g.out);
    } else if (*evaluate) {
      std::optional<std::filesystem::path> m, s;
      if (eval_masks) m = *eval_masks;
      if (eval_meas) s = *eval_meas;
      cmd::evaluate(load_config(g, SeedTarget::None), estimate, image, m, s, scheme, g.out);
    } else if (*sq) {
      cmd::sweep_quant(load_config(g, SeedTarget::Design), g.out);
    } else if (*sc) {
      cmd::sweep_cutoffs_cmd(load_config(g, SeedTarget::Design), g.out, g.threads);
    } else if (*sm) {
      cmd::sweep_measurements_cmd(load_config(g, SeedTarget::Design), g.out, g.threads);
    } else if (*cmp) {
      cmd::compare(load_config(g, SeedTarget::Design), g.out, g.threads);
    }
  } catch (const mf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const mf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
