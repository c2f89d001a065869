#pragma once

#include <algorithm>
#include <cassert>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace maskforge {

using cplx = std::complex<double>;

// Dense row-major 2D array.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const auto& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealField = Grid<double>;
using ComplexField = Grid<cplx>;
// Phase angles in radians, interpreted modulo 2*pi.
using PhaseField = Grid<double>;

template <typename T, typename F>
auto map_grid(const Grid<T>& in, F&& f) {
  using R = decltype(f(in[0]));
  Grid<R> out(in.rows(), in.cols());
  std::transform(in.begin(), in.end(), out.begin(), f);
  return out;
}

inline RealField angle(const ComplexField& z) {
  return map_grid(z, [](cplx v) { return std::arg(v); });
}

inline RealField abs2(const ComplexField& z) {
  return map_grid(z, [](cplx v) { return std::norm(v); });
}

inline ComplexField unit_phasors(const PhaseField& psi) {
  return map_grid(psi, [](double p) { return std::polar(1.0, p); });
}

template <typename T>
double sum_norm(const Grid<T>& g) {
  double s = 0.0;
  for (const auto& v : g) s += std::norm(v);
  return s;
}

// Signed frequency index of DFT bin k on an n-point axis, in [-n/2, n/2).
inline long signed_frequency(std::size_t k, std::size_t n) {
  const auto ik = static_cast<long>(k);
  const auto in = static_cast<long>(n);
  return (2 * ik >= in) ? ik - in : ik;
}

// Moves DC from [0,0] to [rows/2, cols/2].
template <typename T>
Grid<T> fftshift(const Grid<T>& in) {
  Grid<T> out(in.rows(), in.cols());
  const std::size_t hr = in.rows() / 2, hc = in.cols() / 2;
  for (std::size_t r = 0; r < in.rows(); ++r)
    for (std::size_t c = 0; c < in.cols(); ++c)
      out((r + hr) % in.rows(), (c + hc) % in.cols()) = in(r, c);
  return out;
}

}  // namespace maskforge
