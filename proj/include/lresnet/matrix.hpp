#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lresnet {

// Small dense row-major matrix; enough for Jacobians and toy-net weights.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0)) : r_(rows), c_(cols), d_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return r_; }
  std::size_t cols() const noexcept { return c_; }
  T& operator()(std::size_t r, std::size_t c) noexcept { return d_[r * c_ + c]; }
  T operator()(std::size_t r, std::size_t c) const noexcept { return d_[r * c_ + c]; }
  std::span<const T> row(std::size_t r) const noexcept { return {d_.data() + r * c_, c_}; }
  std::span<T> row(std::size_t r) noexcept { return {d_.data() + r * c_, c_}; }
  std::span<const T> data() const noexcept { return d_; }
  std::span<T> data() noexcept { return d_; }

  // this * v
  std::vector<T> apply(std::span<const T> v) const {
    if (v.size() != c_) throw dimension_error("Matrix::apply: expected " + std::to_string(c_) + " entries");
    std::vector<T> out(r_, T(0));
    for (std::size_t i = 0; i < r_; ++i) {
      T s = 0;
      for (std::size_t j = 0; j < c_; ++j) s += (*this)(i, j) * v[j];
      out[i] = s;
    }
    return out;
  }

  // this^T * v
  std::vector<T> apply_transposed(std::span<const T> v) const {
    if (v.size() != r_) throw dimension_error("Matrix::apply_transposed: expected " + std::to_string(r_) + " entries");
    std::vector<T> out(c_, T(0));
    for (std::size_t i = 0; i < r_; ++i) {
      for (std::size_t j = 0; j < c_; ++j) out[j] += (*this)(i, j) * v[i];
    }
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t r_ = 0;
  std::size_t c_ = 0;
  std::vector<T> d_;
};

}  // namespace lresnet
