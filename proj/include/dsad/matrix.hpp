#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dsad/errors.hpp"

namespace dsad {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 as convenient.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, 0.0) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double& operator()(int i, int j) { return d_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return d_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row(int i) { return d_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row(int i) const { return d_.data() + static_cast<std::size_t>(i) * cols_; }

  void fill(double v) { std::fill(d_.begin(), d_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double v : d_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.d_ == b.d_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

inline void require_shape(const Matrix& m, int rows, int cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw dimension_error(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
}

}  // namespace dsad
