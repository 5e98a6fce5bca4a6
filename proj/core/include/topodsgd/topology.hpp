#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "topodsgd/matrix.hpp"

namespace topodsgd {

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Validation tolerances for gossip matrices.
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kStochasticTolerance = 1e-10;

/// Symmetric doubly-stochastic averaging weights over n workers, together
/// with the undirected edge set the weights were built from.
class GossipMatrix {
 public:
  GossipMatrix(Matrix weights, std::vector<Edge> edges, std::string label);

  std::size_t size() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& label() const { return label_; }
  std::vector<std::size_t> degrees() const;

 private:
  Matrix weights_;
  std::vector<Edge> edges_;
  std::string label_;
};

/// Metropolis-Hastings weights on a simple undirected graph:
/// w_ij = 1 / (max(deg_i, deg_j) + 1) on edges, w_ii = 1 - sum_{j != i} w_ij.
/// Throws InvalidArgument on self-loops, duplicate edges or out-of-range ends.
GossipMatrix metropolis_hastings(std::size_t n, std::vector<Edge> edges, std::string label);

/// Builds a gossip matrix from a topology spec:
///   ring:n  chain:n  star:n  torus:RxC  binary_tree:n  hypercube:n
///   fully_connected:n  disconnected:n  edge_list:<path>
/// Every family uses Metropolis-Hastings weights.
GossipMatrix build_topology(std::string_view spec);

/// Reads "i j" pairs (0-indexed, '#' comments) into an edge list; n is one
/// more than the largest index seen.
GossipMatrix load_edge_list(const std::string& path);

struct Violation {
  std::string invariant;
  double deviation = 0.0;
  std::string message() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  std::string to_string() const;
};

// Report-only check of the gossip-matrix invariants. The edge set, when
// given, is compared against the nonzero off-diagonal pattern.
ValidationReport validate(const Matrix& weights, const std::vector<Edge>* declared_edges = nullptr);
ValidationReport validate(const GossipMatrix& w);

/// Eigendecomposition of a symmetric gossip matrix.
struct Spectrum {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // orthonormal columns

  std::size_t size() const { return eigenvalues.size(); }
  double lambda2() const;
  Matrix reconstruct() const;
};

// Throws InvalidArgument if the input is not symmetric within kSymmetryTolerance.
Spectrum spectrum(const Matrix& weights);
Spectrum spectrum(const GossipMatrix& w);

// 1 - lambda_2. Throws InvalidArgument for a single worker.
double spectral_gap(const Spectrum& s);
double spectral_gap(const GossipMatrix& w);

enum class ScheduleKind { Static, TimeVarying };

/// Sequence of gossip matrices indexed by step.
class TopologySchedule {
 public:
  using Generator = std::function<GossipMatrix(std::size_t)>;

  explicit TopologySchedule(GossipMatrix fixed);
  TopologySchedule(std::size_t n, Generator generator, std::string label);

  std::size_t size() const { return n_; }
  ScheduleKind kind() const { return kind_; }
  bool is_static() const { return kind_ == ScheduleKind::Static; }
  const std::string& label() const { return label_; }

  // Matrix used at step t. Static schedules return the same matrix for every t.
  GossipMatrix at(std::size_t t) const;
  // Only valid for static schedules.
  const GossipMatrix& fixed() const;

 private:
  std::size_t n_;
  ScheduleKind kind_;
  std::string label_;
  std::shared_ptr<const GossipMatrix> fixed_;
  Generator generator_;
};

/// Time-varying hypercube scheme for n = 2^k workers: at step t worker i
/// averages with i XOR 2^(t mod k) using weight 1/2. Any k consecutive
/// matrices multiply to the uniform averaging matrix.
TopologySchedule exponential_schedule(std::size_t n);

// Static topology spec or "exp:n" / "exponential:n" for the time-varying scheme.
TopologySchedule build_schedule(std::string_view spec);

}  // namespace topodsgd
