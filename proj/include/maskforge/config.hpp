#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "baseline_masks.hpp"
#include "error.hpp"
#include "io.hpp"
#include "mask_design.hpp"
#include "optics_sim.hpp"
#include "reconstruct.hpp"

namespace maskforge {

// Everything a CLI command or experiment may need. Defaults follow the
// published simulation protocol.
struct ExperimentConfig {
  std::string name = "experiment";

  DesignConfig design{};
  OpticalGeometry geometry{};
  MeasurementModel model = MeasurementModel::optical(4, 12);
  std::uint64_t noise_seed = 0;

  SolverConfig solver = [] {
    SolverConfig s;
    s.iterations = 200;
    s.admm_rho = 0.5;
    s.init = InitKind::Random;
    s.seed = 1000;
    s.track_objective = false;
    return s;
  }();
  std::vector<double> tv_grid{};  // empty: use solver.tv_weight only

  std::vector<std::string> schemes{"optmask", "green", "white16", "white4"};
  std::vector<std::string> images{"cells", "natural"};
  std::size_t trials = 3;
  std::uint64_t baseline_seed = 500;
  SpectralFilter green_filter = kGreenDefaultFilter;

  std::vector<std::uint32_t> quant_levels{2, 4, 8, 16, 32};
  SpectralFilter quant_filter{std::numbers::pi / 3.0, std::numbers::pi / 2.0};

  std::vector<SpectralFilter> cutoffs{
      {std::numbers::pi / 4.0, std::numbers::pi / 2.0},
      {std::numbers::pi / 5.0, std::numbers::pi / 2.0},
      {std::numbers::pi / 3.0, std::numbers::pi / 2.0},
      {std::numbers::pi / 5.0, std::numbers::pi / 3.0},
      {std::numbers::pi / 2.0, 4.0 * std::numbers::pi / 5.0},
  };
  std::size_t cutoff_masks = 10;
  std::string cutoff_image = "natural";

  std::size_t max_measurements = 4;

  std::size_t entropy_block = 32;
  std::size_t binary_entropy_block = 16;

  void validate() const {
    design.validate();
    geometry.validate(design.n);
    model.validate(design.n);
    solver.validate();
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (schemes.empty()) throw ValidationError("scheme list is empty");
    if (images.empty()) throw ValidationError("image list is empty");
    for (double t : tv_grid)
      if (!(t >= 0.0)) throw ValidationError("tv_grid entries must be >= 0");
    for (auto m : quant_levels)
      if (m < 2 || m > 256) throw ValidationError("quant_levels entries must be in [2, 256]");
    quant_filter.validate();
    green_filter.validate();
    for (const auto& f : cutoffs) f.validate();
    if (cutoff_masks < 1) throw ValidationError("cutoff_masks must be >= 1");
    if (max_measurements < 1) throw ValidationError("max_measurements must be >= 1");
    if (entropy_block == 0 || design.n % entropy_block != 0 || binary_entropy_block == 0 ||
        design.n % binary_entropy_block != 0)
      throw ValidationError("block mismatch: entropy block sizes must divide n");
  }

  std::vector<double> effective_tv_grid() const {
    return tv_grid.empty() ? std::vector<double>{solver.tv_weight} : tv_grid;
  }
};

namespace config {

// Parses a real number, also accepting multiples of pi: "pi", "pi/5", "4pi/5",
// "4*pi/5", "0.5pi".
inline double parse_real(const std::string& text, const std::string& key) {
  static const std::regex pi_expr(R"(^\s*([-+]?[0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*(?:pi|π)\s*(?:/\s*([0-9]*\.?[0-9]+)\s*)?$)");
  std::smatch m;
  if (std::regex_match(text, m, pi_expr)) {
    double k = 1.0;
    const std::string coef = m[1].str();
    if (coef == "-") k = -1.0;
    else if (!coef.empty() && coef != "+") k = std::stod(coef);
    double d = m[2].matched ? std::stod(m[2].str()) : 1.0;
    if (d == 0.0) throw ValidationError(key + ": division by zero");
    return k * std::numbers::pi / d;
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (text.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(key + ": cannot parse '" + text + "' as a number");
  }
}

inline std::uint64_t parse_uint(const std::string& text, const std::string& key) {
  if (text.empty() || text.find_first_not_of("0123456789 \t") != std::string::npos)
    throw ValidationError(key + ": expected a non-negative integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ValidationError(key + ": integer out of range");
  }
}

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Fidelity parse_fidelity(const std::string& s) {
  if (s == "dft") return Fidelity::DiscreteDFT;
  if (s == "optical") return Fidelity::OpticalEmulation;
  throw ValidationError("fidelity must be 'dft' or 'optical', got '" + s + "'");
}

inline InitKind parse_init(const std::string& s) {
  if (s == "random") return InitKind::Random;
  if (s == "backprojection") return InitKind::Backprojection;
  throw ValidationError("init must be 'random' or 'backprojection', got '" + s + "'");
}

// "a:b" pair of cutoffs. Reversed pairs are taken as the band between them.
inline SpectralFilter parse_band(const std::string& s, const std::string& key) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw ValidationError(key + ": expected low:high, got '" + s + "'");
  double a = parse_real(parts[0], key), b = parse_real(parts[1], key);
  if (a > b) std::swap(a, b);
  SpectralFilter f{a, b};
  f.validate();
  return f;
}

// Applies one section.key = value assignment. Unknown keys are rejected.
inline void apply(ExperimentConfig& c, const std::string& section, const std::string& key,
                  const std::string& raw) {
  const std::string v = trim(raw);
  const std::string k = section + "." + key;
  auto real = [&] { return parse_real(v, k); };
  auto uint = [&] { return parse_uint(v, k); };

  if (section == "experiment") {
    if (key == "name") c.name = v;
    else if (key == "schemes") c.schemes = split(v, ',');
    else if (key == "images") c.images = split(v, ',');
    else if (key == "trials") c.trials = uint();
    else if (key == "baseline_seed") c.baseline_seed = uint();
    else if (key == "green_low_cutoff") c.green_filter.low_cutoff = real();
    else if (key == "green_high_cutoff") c.green_filter.high_cutoff = real();
    else if (key == "quant_levels") {
      c.quant_levels.clear();
      for (const auto& t : split(v, ',')) c.quant_levels.push_back(static_cast<std::uint32_t>(parse_uint(t, k)));
    } else if (key == "quant_low_cutoff") c.quant_filter.low_cutoff = real();
    else if (key == "quant_high_cutoff") c.quant_filter.high_cutoff = real();
    else if (key == "cutoffs") {
      c.cutoffs.clear();
      for (const auto& t : split(v, ',')) c.cutoffs.push_back(parse_band(t, k));
    } else if (key == "cutoff_masks") c.cutoff_masks = uint();
    else if (key == "cutoff_image") c.cutoff_image = v;
    else if (key == "max_measurements") c.max_measurements = uint();
    else if (key == "entropy_block") c.entropy_block = uint();
    else if (key == "binary_entropy_block") c.binary_entropy_block = uint();
    else throw ValidationError("unknown config key " + k);
  } else if (section == "design") {
    auto& d = c.design;
    if (key == "n") d.n = uint();
    else if (key == "alpha") d.alpha = real();
    else if (key == "beta") d.beta = real();
    else if (key == "delta") d.delta = real();
    else if (key == "max_iters_stage1") d.max_iters_stage1 = uint();
    else if (key == "g_loops") d.g_loops = uint();
    else if (key == "m_levels") d.m_levels = static_cast<std::uint32_t>(uint());
    else if (key == "l_masks") d.l_masks = uint();
    else if (key == "low_cutoff") d.filter.low_cutoff = real();
    else if (key == "high_cutoff") d.filter.high_cutoff = real();
    else if (key == "seed" || key == "rng_seed") d.rng_seed = uint();
    else throw ValidationError("unknown config key " + k);
  } else if (section == "optics") {
    auto& g = c.geometry;
    if (key == "wavelength") g.wavelength = real();
    else if (key == "focal_length") g.focal_length = real();
    else if (key == "slm_pitch") g.slm_pitch = real();
    else if (key == "sensor_pitch") g.sensor_pitch = real();
    else if (key == "fill_factor") g.fill_factor = real();
    else throw ValidationError("unknown config key " + k);
  } else if (section == "measurement") {
    auto& m = c.model;
    if (key == "fidelity") m.fidelity = parse_fidelity(v);
    else if (key == "supersample") m.supersample = static_cast<std::uint32_t>(uint());
    else if (key == "sensor_bits") m.sensor_bits = static_cast<std::uint32_t>(uint());
    else if (key == "photon_scale") m.photon_scale = real();
    else if (key == "pad") m.pad_rows = m.pad_cols = uint();
    else if (key == "noise_seed") c.noise_seed = uint();
    else throw ValidationError("unknown config key " + k);
  } else if (section == "solver") {
    auto& s = c.solver;
    if (key == "tv_weight") s.tv_weight = real();
    else if (key == "tv_grid") {
      c.tv_grid.clear();
      for (const auto& t : split(v, ',')) c.tv_grid.push_back(parse_real(t, k));
    } else if (key == "rho" || key == "admm_rho") s.admm_rho = real();
    else if (key == "iterations") s.iterations = uint();
    else if (key == "init") s.init = parse_init(v);
    else if (key == "seed") s.seed = uint();
    else throw ValidationError("unknown config key " + k);
  } else {
    throw ValidationError("unknown config section [" + section + "]");
  }
}

// Keeps the supersample factor consistent when only the fidelity changes.
inline void set_fidelity(ExperimentConfig& c, Fidelity f) {
  c.model.fidelity = f;
  if (f == Fidelity::DiscreteDFT) c.model.supersample = 1;
  else if (c.model.supersample < 2) c.model.supersample = 4;
}

inline ExperimentConfig parse(std::istream& in, const std::string& what = "config") {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(what + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  bool fidelity_given = false, supersample_given = false;
  for (const auto& [section, sub] : pt) {
    if (sub.empty() && !sub.data().empty())
      throw ValidationError(what + ": key '" + section + "' must be inside a [section]");
    for (const auto& [key, val] : sub) {
      apply(c, section, key, val.data());
      if (section == "measurement" && key == "fidelity") fidelity_given = true;
      if (section == "measurement" && key == "supersample") supersample_given = true;
    }
  }
  if (fidelity_given && !supersample_given) set_fidelity(c, c.model.fidelity);
  return c;
}

inline ExperimentConfig load(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open config " + p.string());
  return parse(in, p.string());
}

inline std::string band_string(const SpectralFilter& f) {
  return io::format_double(f.low_cutoff) + ":" + io::format_double(f.high_cutoff);
}

inline std::string design_ini(const DesignConfig& d) {
  using io::format_double;
  std::ostringstream o;
  o << "[design]\n"
    << "n = " << d.n << "\n"
    << "alpha = " << format_double(d.alpha) << "\n"
    << "beta = " << format_double(d.beta) << "\n"
    << "delta = " << format_double(d.delta) << "\n"
    << "max_iters_stage1 = " << d.max_iters_stage1 << "\n"
    << "g_loops = " << d.g_loops << "\n"
    << "m_levels = " << d.m_levels << "\n"
    << "l_masks = " << d.l_masks << "\n"
    << "low_cutoff = " << format_double(d.filter.low_cutoff) << "\n"
    << "high_cutoff = " << format_double(d.filter.high_cutoff) << "\n"
    << "seed = " << d.rng_seed << "\n";
  return o.str();
}

// Full effective configuration; parse(to_ini(c)) reproduces c.
inline std::string to_ini(const ExperimentConfig& c) {
  using io::format_double;
  auto join = [](const auto& xs, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s;
  };
  auto str = [](const std::string& s) { return s; };
  std::ostringstream o;
  o << "[experiment]\n"
    << "name = " << c.name << "\n"
    << "schemes = " << join(c.schemes, str) << "\n"
    << "images = " << join(c.images, str) << "\n"
    << "trials = " << c.trials << "\n"
    << "baseline_seed = " << c.baseline_seed << "\n"
    << "green_low_cutoff = " << format_double(c.green_filter.low_cutoff) << "\n"
    << "green_high_cutoff = " << format_double(c.green_filter.high_cutoff) << "\n"
    << "quant_levels = " << join(c.quant_levels, [](auto m) { return std::to_string(m); }) << "\n"
    << "quant_low_cutoff = " << format_double(c.quant_filter.low_cutoff) << "\n"
    << "quant_high_cutoff = " << format_double(c.quant_filter.high_cutoff) << "\n"
    << "cutoffs = " << join(c.cutoffs, band_string) << "\n"
    << "cutoff_masks = " << c.cutoff_masks << "\n"
    << "cutoff_image = " << c.cutoff_image << "\n"
    << "max_measurements = " << c.max_measurements << "\n"
    << "entropy_block = " << c.entropy_block << "\n"
    << "binary_entropy_block = " << c.binary_entropy_block << "\n\n"
    << design_ini(c.design) << "\n"
    << "[optics]\n"
    << "wavelength = " << format_double(c.geometry.wavelength) << "\n"
    << "focal_length = " << format_double(c.geometry.focal_length) << "\n"
    << "slm_pitch = " << format_double(c.geometry.slm_pitch) << "\n"
    << "sensor_pitch = " << format_double(c.geometry.sensor_pitch) << "\n"
    << "fill_factor = " << format_double(c.geometry.fill_factor) << "\n\n"
    << "[measurement]\n"
    << "fidelity = " << to_string(c.model.fidelity) << "\n"
    << "supersample = " << c.model.supersample << "\n"
    << "sensor_bits = " << c.model.sensor_bits << "\n"
    << "photon_scale = " << format_double(c.model.photon_scale) << "\n"
    << "pad = " << c.model.pad_rows << "\n"
    << "noise_seed = " << c.noise_seed << "\n\n"
    << "[solver]\n"
    << "tv_weight = " << format_double(c.solver.tv_weight) << "\n";
  if (!c.tv_grid.empty()) o << "tv_grid = " << join(c.tv_grid, [](double t) { return format_double(t); }) << "\n";
  o << "rho = " << format_double(c.solver.admm_rho) << "\n"
    << "iterations = " << c.solver.iterations << "\n"
    << "init = " << (c.solver.init == InitKind::Random ? "random" : "backprojection") << "\n"
    << "seed = " << c.solver.seed << "\n";
  return o.str();
}

}  // namespace config
}  // namespace maskforge
