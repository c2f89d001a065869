#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>

#include "grid.hpp"

namespace maskforge {

namespace detail {
// The FFTW planner is not re-entrant; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// In-place 2D complex DFT on an owned, FFTW-aligned buffer. Transforms are
// unnormalized; FFTW_ESTIMATE keeps the chosen algorithm (and therefore the
// bits of every result) independent of timing.
class Fft2d {
 public:
  Fft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * rows * cols));
    if (buf_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int r = static_cast<int>(rows), c = static_cast<int>(cols);
    fwd_ = fftw_plan_dft_2d(r, c, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(r, c, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }

  std::span<cplx> buffer() { return {reinterpret_cast<cplx*>(buf_), size()}; }
  cplx& at(std::size_t r, std::size_t c) { return reinterpret_cast<cplx*>(buf_)[r * cols_ + c]; }

  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }

  // Copies `in` into the top-left corner (zero elsewhere).
  void load_padded(const ComplexField& in) {
    auto b = buffer();
    std::fill(b.begin(), b.end(), cplx{});
    for (std::size_t r = 0; r < in.rows(); ++r)
      for (std::size_t c = 0; c < in.cols(); ++c) at(r, c) = in(r, c);
  }
  void load(const ComplexField& in) {
    std::copy(in.begin(), in.end(), buffer().begin());
  }
  ComplexField store() const {
    ComplexField out(rows_, cols_);
    const auto* p = reinterpret_cast<const cplx*>(buf_);
    std::copy(p, p + size(), out.begin());
    return out;
  }
  void scale(double s) {
    for (auto& v : buffer()) v *= s;
  }

 private:
  std::size_t rows_, cols_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// Unitary DFT of `in`, zero-padded to rows x cols.
inline ComplexField dft2(const ComplexField& in, std::size_t rows, std::size_t cols) {
  Fft2d fft(rows, cols);
  fft.load_padded(in);
  fft.forward();
  fft.scale(1.0 / std::sqrt(static_cast<double>(rows * cols)));
  return fft.store();
}

inline ComplexField dft2(const ComplexField& in) { return dft2(in, in.rows(), in.cols()); }

// Unitary inverse DFT.
inline ComplexField idft2(const ComplexField& in) {
  Fft2d fft(in.rows(), in.cols());
  fft.load(in);
  fft.backward();
  fft.scale(1.0 / std::sqrt(static_cast<double>(in.size())));
  return fft.store();
}

// |DFT(T)|^2 with the unitary normalization.
inline RealField power_spectrum(const ComplexField& field) { return abs2(dft2(field)); }

}  // namespace maskforge
