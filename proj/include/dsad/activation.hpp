#pragma once

#include <cmath>

#include "dsad/matrix.hpp"

namespace dsad {

// Module-wide smooth nonlinearity: exact Gaussian-error linear unit.
// Every layer that needs an activation uses this one.

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
  const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

inline void gelu_inplace(Matrix& m) {
  double* d = m.data();
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) d[i] = gelu(d[i]);
}

// dpre = dout .* gelu'(pre)
inline void gelu_backward(const Matrix& pre, const Matrix& dout, Matrix& dpre) {
  const std::size_t n = pre.size();
  for (std::size_t i = 0; i < n; ++i) dpre.data()[i] = dout.data()[i] * gelu_grad(pre.data()[i]);
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace dsad
