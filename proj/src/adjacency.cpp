#include "dsad/adjacency.hpp"

#include <cmath>

#include "dsad/errors.hpp"

namespace dsad {

AdjacencyMatrix build_adjacency(int t, double tau) {
  if (t < 1) throw invalid_parameter("build_adjacency: T must be >= 1");
  if (!(tau > 0.0)) throw invalid_parameter("build_adjacency: tau must be > 0");
  AdjacencyMatrix adj;
  adj.tau = tau;
  adj.entries = Matrix(t, t);
  for (int i = 0; i < t; ++i) {
    adj.entries(i, i) = 1.0;
    for (int j = i + 1; j < t; ++j) {
      const double v = std::exp(-static_cast<double>(j - i) / tau);
      adj.entries(i, j) = v;
      adj.entries(j, i) = v;
    }
  }
  return adj;
}

Matrix row_normalized(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j);
    if (!(s > 0.0)) throw numeric_error("row_normalized: non-positive row sum");
    const double inv = 1.0 / s;
    for (int j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * inv;
  }
  return out;
}

}  // namespace dsad
