#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace maskforge {

// Uniform M-level phase codebook: entries[m] = 2*pi*m/M.
struct Codebook {
  std::uint32_t levels = 0;
  std::vector<double> entries;

  static Codebook uniform(std::uint32_t m) {
    if (m < 2 || m > 256)
      throw ValidationError("codebook levels must be in [2, 256], got " + std::to_string(m));
    Codebook cb;
    cb.levels = m;
    cb.entries.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) cb.entries[i] = 2.0 * std::numbers::pi * i / m;
    return cb;
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

// Phase-only mask stored as codeword indices. The complex transmission is
// only ever materialized on demand, so |T| = 1 holds exactly.
struct QuantizedMask {
  Grid<std::uint16_t> indices;
  Codebook codebook;
  std::uint32_t mask_index = 1;
  std::uint64_t seed = 0;

  std::size_t n() const { return indices.rows(); }

  PhaseField phases() const {
    return map_grid(indices, [this](std::uint16_t i) { return codebook.entries[i]; });
  }

  ComplexField transmission() const {
    std::vector<cplx> lut(codebook.levels);
    for (std::size_t m = 0; m < lut.size(); ++m) lut[m] = std::polar(1.0, codebook.entries[m]);
    return map_grid(indices, [&lut](std::uint16_t i) { return lut[i]; });
  }

  friend bool operator==(const QuantizedMask&, const QuantizedMask&) = default;
};

using MaskSet = std::vector<QuantizedMask>;

}  // namespace maskforge
