#pragma once

#include "dsad/matrix.hpp"

namespace dsad {

// Temporal-distance adjacency: entries[i][j] = exp(-|i-j| / tau).
// Symmetric, unit diagonal, entries in (0, 1], strictly decaying with |i-j|.
struct AdjacencyMatrix {
  Matrix entries;
  double tau = 1.0;
};

AdjacencyMatrix build_adjacency(int t, double tau);

// Each row divided by its sum; rows of the result lie on the simplex.
Matrix row_normalized(const Matrix& a);

}  // namespace dsad
