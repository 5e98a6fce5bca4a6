#pragma once

// Independent reference computations built on Eigen, used to cross-check
// the library's own Jacobi solver and closed forms.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "topodsgd/matrix.hpp"
#include "topodsgd/topology.hpp"

namespace oracle {

inline Eigen::MatrixXd to_eigen(const topodsgd::Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline topodsgd::Matrix from_eigen(const Eigen::MatrixXd& m) {
  topodsgd::Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

// Eigenvalues in descending order.
inline std::vector<double> eigenvalues(const topodsgd::Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.rbegin(), v.rend());
  return v;
}

// n_W from the walk's power series: Var(y) = 1/(1-g), mean Var(z) =
// (1/n) sum_m g^m ||W^{m+1}||_F^2, truncated once g^m < 1e-18.
inline double neighbors_series(const topodsgd::Matrix& w, double gamma) {
  const Eigen::MatrixXd W = to_eigen(w);
  const double n = static_cast<double>(W.rows());
  Eigen::MatrixXd P = W;
  double sum = 0.0;
  double weight = 1.0;
  for (int m = 0; m < 2000000 && weight > 1e-18; ++m) {
    sum += weight * P.squaredNorm() / n;
    P = P * W;
    weight *= gamma;
  }
  return (1.0 / (1.0 - gamma)) / sum;
}

// M = (1 - g) W^2 (I - g W^2)^{-1} by direct inversion.
inline Eigen::MatrixXd m_matrix(const topodsgd::Matrix& w, double gamma) {
  const Eigen::MatrixXd W = to_eigen(w);
  const Eigen::MatrixXd W2 = W * W;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(W.rows(), W.cols());
  return (1.0 - gamma) * W2 * (I - gamma * W2).inverse();
}

// Dense n^2 x n^2 covariance transition for the isotropic quadratic and its
// spectral radius (general, non-symmetric eigen solver).
inline double transition_spectral_radius(const topodsgd::Matrix& w, double eta, double zeta) {
  const Eigen::MatrixXd W = to_eigen(w);
  const Eigen::Index n = W.rows();
  const double a = (1.0 - eta) * (1.0 - eta);
  const double b = (zeta - 1.0) * eta * eta;
  Eigen::MatrixXd T(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) {
          const double scale = k == l ? a + b : a;
          T(i * n + j, k * n + l) = W(i, k) * W(j, l) * scale;
        }
  Eigen::EigenSolver<Eigen::MatrixXd> es(T, false);
  double rho = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) rho = std::max(rho, std::abs(es.eigenvalues()(k)));
  return rho;
}

// Random connected graph: a random spanning tree plus extra edges.
inline std::vector<topodsgd::Edge> random_connected_edges(std::size_t n, double extra_prob, std::mt19937_64& rng) {
  std::vector<topodsgd::Edge> edges;
  std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> parent(0, v - 1);
    const std::size_t u = parent(rng);
    edges.push_back({u, v});
    used[u][v] = used[v][u] = true;
  }
  std::bernoulli_distribution extra(extra_prob);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!used[i][j] && extra(rng)) edges.push_back({i, j});
  return edges;
}

inline const std::vector<std::string>& small_topologies() {
  static const std::vector<std::string> specs = {
      "ring:3",      "ring:4",          "ring:8",          "ring:16",        "chain:2",        "chain:5",
      "chain:16",    "star:4",          "star:8",          "star:16",        "torus:3x3",      "torus:3x5",
      "torus:4x4",   "binary_tree:7",   "binary_tree:12",  "hypercube:2",    "hypercube:8",    "hypercube:16",
      "fully_connected:2", "fully_connected:9", "fully_connected:16", "disconnected:1", "disconnected:6",
  };
  return specs;
}

}  // namespace oracle
