#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "rng.hpp"

namespace maskforge {

// Generated grayscale test images with values in [0, 1].
namespace images {

// Overlapping Gaussian blobs of varied size, like a field of cells.
inline RealField cells(std::size_t n, std::uint64_t seed = 7) {
  Rng rng(seed);
  RealField img(n, n, 0.0);
  const std::size_t count = 12 + n / 8;
  for (std::size_t b = 0; b < count; ++b) {
    const double cy = rng.uniform01() * n, cx = rng.uniform01() * n;
    const double rad = (0.03 + 0.07 * rng.uniform01()) * n;
    const double amp = 0.4 + 0.6 * rng.uniform01();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double dy = r - cy, dx = c - cx;
        img(r, c) += amp * std::exp(-(dx * dx + dy * dy) / (2 * rad * rad));
      }
  }
  const double mx = *std::max_element(img.begin(), img.end());
  for (auto& v : img) v /= mx;
  return img;
}

// Lowpass-filtered noise with a 1/f-like falloff: smooth natural texture.
inline RealField natural(std::size_t n, std::uint64_t seed = 11) {
  Rng rng(seed);
  ComplexField spec(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double fy = signed_frequency(r, n), fx = signed_frequency(c, n);
      const double f = std::sqrt(fx * fx + fy * fy);
      const double gain = 1.0 / (1.0 + std::pow(f / (0.04 * n), 2.0));
      spec(r, c) = gain * std::polar(1.0, rng.uniform_phase());
    }
  const ComplexField sp = idft2(spec);
  RealField img(n, n);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = sp[i].real();
  const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
  const double a = *lo, w = *hi - *lo;
  for (auto& v : img) v = (v - a) / w;
  return img;
}

// Spiral phase of a charge-1 optical vortex, as a fraction of a turn.
inline RealField vortex(std::size_t n) {
  RealField img(n, n);
  const double c0 = (n - 1) / 2.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double a = std::atan2(r - c0, c - c0);
      img(r, c) = (a + std::numbers::pi) / (2.0 * std::numbers::pi);
    }
  return img;
}

inline RealField checkerboard(std::size_t n, std::size_t cells_per_side = 8) {
  RealField img(n, n);
  const std::size_t w = std::max<std::size_t>(1, n / cells_per_side);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) img(r, c) = ((r / w + c / w) % 2) ? 1.0 : 0.0;
  return img;
}

// Binary resolution target: groups of three bars at decreasing widths,
// horizontal and vertical.
inline RealField usaf(std::size_t n) {
  RealField img(n, n, 0.0);
  std::size_t x0 = n / 16, y0 = n / 16;
  for (std::size_t w = std::max<std::size_t>(1, n / 24); w >= 1 && x0 + 10 * w < n; w = w * 2 / 3) {
    const std::size_t len = 5 * w;
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t r = y0; r < std::min(n, y0 + len); ++r)
        for (std::size_t c = x0 + 2 * b * w; c < std::min(n, x0 + 2 * b * w + w); ++c) img(r, c) = 1.0;
      for (std::size_t r = y0 + len + w + 2 * b * w; r < std::min(n, y0 + len + w + 2 * b * w + w); ++r)
        for (std::size_t c = x0; c < std::min(n, x0 + len); ++c) img(r, c) = 1.0;
    }
    x0 += 6 * w + 2;
    if (w == 1) break;
    y0 += w / 2;
  }
  return img;
}

inline std::vector<std::string> builtin_names() {
  return {"cells", "natural", "vortex", "checkerboard", "usaf"};
}

inline bool is_builtin(const std::string& name) {
  const auto names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

inline RealField builtin(const std::string& name, std::size_t n) {
  if (name == "cells") return cells(n);
  if (name == "natural") return natural(n);
  if (name == "vortex") return vortex(n);
  if (name == "checkerboard") return checkerboard(n);
  if (name == "usaf") return usaf(n);
  throw ValidationError("unknown built-in image '" + name + "'");
}

}  // namespace images

// Phase-only object exp(i 2 pi v) for v in [0, 1]. Values are scaled by
// 255/256 first so the top of the range does not wrap onto zero.
inline ComplexField phase_object(const RealField& img) {
  return map_grid(img, [](double v) {
    return std::polar(1.0, 2.0 * std::numbers::pi * std::clamp(v, 0.0, 1.0) * (255.0 / 256.0));
  });
}

// Bilinear resize to n x n (used for images loaded from disk).
inline RealField resize(const RealField& img, std::size_t n) {
  if (img.rows() == n && img.cols() == n) return img;
  RealField out(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double y = (r + 0.5) * img.rows() / n - 0.5, x = (c + 0.5) * img.cols() / n - 0.5;
      const double yc = std::clamp(y, 0.0, img.rows() - 1.0), xc = std::clamp(x, 0.0, img.cols() - 1.0);
      const std::size_t y0 = static_cast<std::size_t>(yc), x0 = static_cast<std::size_t>(xc);
      const std::size_t y1 = std::min(y0 + 1, img.rows() - 1), x1 = std::min(x0 + 1, img.cols() - 1);
      const double fy = yc - y0, fx = xc - x0;
      out(r, c) = (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) +
                  fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
    }
  return out;
}

}  // namespace maskforge
