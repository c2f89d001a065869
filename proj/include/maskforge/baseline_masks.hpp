#pragma once

#include <cstdint>
#include <numbers>
#include <string>

#include "error.hpp"
#include "mask.hpp"
#include "mask_design.hpp"
#include "rng.hpp"

namespace maskforge {

enum class BaselineKind { White4, White16, GreenBinaryApprox };

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::White4: return "white4";
    case BaselineKind::White16: return "white16";
    case BaselineKind::GreenBinaryApprox: return "green";
  }
  return "?";
}

// Mid-frequency band used for the binary green-noise stand-in.
inline constexpr SpectralFilter kGreenDefaultFilter{std::numbers::pi / 3.0, std::numbers::pi / 2.0};

// I.i.d. uniform codeword draws. Mask l uses seed + l.
inline MaskSet generate_white(std::size_t n, std::size_t l_masks, std::uint64_t seed,
                              std::uint32_t levels) {
  if (n < 4) throw ValidationError("mask side n must be >= 4");
  const Codebook cb = Codebook::uniform(levels);
  MaskSet out;
  for (std::size_t l = 1; l <= l_masks; ++l) {
    Rng rng(seed + l);
    QuantizedMask m{Grid<std::uint16_t>(n, n), cb, static_cast<std::uint32_t>(l), seed + l};
    for (auto& v : m.indices) v = static_cast<std::uint16_t>(rng.index(levels));
    out.push_back(std::move(m));
  }
  return out;
}

// Phases {0, pi/2, pi, 3pi/2}, i.e. transmissions {1, i, -1, -i}.
inline MaskSet generate_white4(std::size_t n, std::size_t l_masks, std::uint64_t seed) {
  return generate_white(n, l_masks, seed, 4);
}

inline MaskSet generate_white16(std::size_t n, std::size_t l_masks, std::uint64_t seed) {
  return generate_white(n, l_masks, seed, 16);
}

// Binary {1, -1} mask from the sign of the real part of a bandpass template.
// This is a stand-in for halftoned green noise: binary levels with energy
// concentrated in the filter band, not a multiscale error-diffusion result.
inline MaskSet generate_green_binary_approx(std::size_t n, std::size_t l_masks, std::uint64_t seed,
                                            const SpectralFilter& filter = kGreenDefaultFilter) {
  const Codebook cb = Codebook::uniform(2);
  MaskSet out;
  for (std::size_t l = 1; l <= l_masks; ++l) {
    const ComplexField t = generate_template(n, filter, seed + l);
    QuantizedMask m{Grid<std::uint16_t>(n, n), cb, static_cast<std::uint32_t>(l), seed + l};
    for (std::size_t i = 0; i < t.size(); ++i) m.indices[i] = t[i].real() >= 0.0 ? 0 : 1;
    out.push_back(std::move(m));
  }
  return out;
}

inline MaskSet generate_baseline(BaselineKind kind, std::size_t n, std::size_t l_masks,
                                 std::uint64_t seed,
                                 const SpectralFilter& filter = kGreenDefaultFilter) {
  switch (kind) {
    case BaselineKind::White4: return generate_white4(n, l_masks, seed);
    case BaselineKind::White16: return generate_white16(n, l_masks, seed);
    case BaselineKind::GreenBinaryApprox: return generate_green_binary_approx(n, l_masks, seed, filter);
  }
  throw ValidationError("unknown baseline kind");
}

}  // namespace maskforge
