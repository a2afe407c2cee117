#pragma once

#include <vector>

namespace qrlab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Number of Gauss-Hermite nodes used for expectations over G ~ N(0, 1).
struct QuadratureSpec {
  int nodes = 64;
};

/// Gauss-Hermite rule for the standard normal measure: sum_i w_i f(g_i)
/// approximates E[f(G)], G ~ N(0,1); weights sum to one. Built by
/// Golub-Welsch on the probabilists' Hermite Jacobi matrix and cached per
/// node count. Thread-safe.
const QuadratureRule& gauss_hermite(int nodes);

/// Gauss-Legendre rule on [-1, 1], cached like gauss_hermite.
const QuadratureRule& gauss_legendre(int nodes);

}  // namespace qrlab
