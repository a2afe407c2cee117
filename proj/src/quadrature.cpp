#include "qrlab/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>

#include "qrlab/errors.hpp"

namespace qrlab {
namespace {

// Golub-Welsch: the nodes are the eigenvalues of the symmetric tridiagonal
// Jacobi matrix and the weights are mu0 times the squared first components
// of the normalized eigenvectors.
QuadratureRule golub_welsch(int n, const std::function<double(int)>& off_diagonal, double mu0) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) sub(k - 1) = off_diagonal(k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw DomainError("quadrature: eigen-decomposition failed");

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
    total += rule.weights[i];
  }
  // The first eigenvector components are normalized up to rounding; rescale
  // so the rule integrates constants exactly.
  for (double& w : rule.weights) w *= mu0 / total;

  // Symmetrize: both measures are even, so enforce exact node/weight symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

const QuadratureRule& cached(std::map<int, std::unique_ptr<QuadratureRule>>& cache,
                             std::mutex& mutex, int nodes,
                             const std::function<QuadratureRule(int)>& build) {
  if (nodes < 1) throw DomainError("quadrature: node count must be positive");
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(nodes);
  if (it == cache.end()) {
    it = cache.emplace(nodes, std::make_unique<QuadratureRule>(build(nodes))).first;
  }
  return *it->second;
}

}  // namespace

const QuadratureRule& gauss_hermite(int nodes) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, nodes, [](int n) {
    return golub_welsch(n, [](int k) { return std::sqrt(static_cast<double>(k)); }, 1.0);
  });
}

const QuadratureRule& gauss_legendre(int nodes) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, nodes, [](int n) {
    return golub_welsch(
        n,
        [](int k) {
          const double kk = static_cast<double>(k);
          return kk / std::sqrt(4.0 * kk * kk - 1.0);
        },
        2.0);
  });
}

}  // namespace qrlab
