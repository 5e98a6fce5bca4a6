#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "topodsgd/matrix.hpp"
#include "topodsgd/topology.hpp"

namespace topodsgd {

// Decay values at or above 1 are answered at this value and flagged as a limit.
inline constexpr double kGammaLimit = 1.0 - 1e-6;

// Throws InvalidArgument unless 0 <= gamma < 1.
void require_decay(double gamma);

enum class NeighborMethod { ClosedForm, MonteCarlo };
const char* to_string(NeighborMethod m);

/// Variance reduction of the decayed random walk with gossip averaging,
/// relative to the same walk without averaging. Lies in [1, n].
struct EffectiveNeighbors {
  double value = 1.0;
  double gamma = 0.0;
  NeighborMethod method = NeighborMethod::ClosedForm;
  double standard_error = 0.0;  // Monte-Carlo only
  bool limit_approximation = false;
  // Stationary variance of each worker in the averaged walk. Differs across
  // workers only on irregular graphs.
  std::vector<double> per_worker_variance;
};

/// n_W(gamma) = [1/(1-gamma)] / [(1/n) sum_i lambda_i^2 / (1 - gamma lambda_i^2)].
EffectiveNeighbors effective_neighbors_closed(const Spectrum& spec, double gamma);

// gamma -> 1 query, evaluated at kGammaLimit and flagged as such.
EffectiveNeighbors effective_neighbors_limit(const Spectrum& spec);

/// Effective neighbors that make the toy-model rate equation exact for any
/// symmetric W, not just graphs whose random-walk covariance has a constant
/// diagonal.
///
/// With G(gamma) = sum_{m>=1} gamma^{m-1} (W^m o W^m) (Hadamard square), the
/// transition operator's diagonal block has Perron root rho(G); this returns
/// 1 / ((1 - gamma) rho(G)). When diag of the covariance is constant, G has
/// constant row sums, rho(G) is the average diagonal, and the value equals
/// the closed form bit-for-bit (that branch is taken directly).
double effective_neighbors_transition(const Spectrum& spec, double gamma);

// True when the stationary random-walk covariance has a constant diagonal
// (regular / vertex-transitive graphs), within 1e-9 relative.
bool has_uniform_variance(const Spectrum& spec, double gamma);

/// Burn-in contract for simulations: ceil(log(1e-6)/log(gamma)) clamped
/// to [100, 1e6]. gamma == 0 gives 100.
std::size_t burn_in_steps(double gamma);

/// Estimates n_W(gamma) by simulating z <- W_t (sqrt(gamma) z + xi) next to
/// y <- sqrt(gamma) y + xi with common noise, from zero state for `steps`
/// steps (0 selects burn_in_steps). Ratio of mean squared iterates at the
/// final step, pooled over reps; the standard error uses the delta method on
/// the per-rep pairs. Each rep draws from its own stream keyed by
/// (seed, rep), so the result does not depend on thread count.
EffectiveNeighbors effective_neighbors_montecarlo(const TopologySchedule& schedule, double gamma,
                                                  std::size_t steps, std::size_t reps, std::uint64_t seed);

/// Final states of the averaged random walk, one row per rep (R x n).
Matrix sample_random_walk(const TopologySchedule& schedule, double gamma, std::size_t steps,
                          std::size_t reps, std::uint64_t seed);

/// M = (1 - gamma) W^2 (I - gamma W^2)^{-1}, built in the eigenbasis of W.
struct LocalAveragingMatrix {
  Matrix m;
  double gamma = 0.0;
  std::vector<double> eigenvalues;  // aligned with the source spectrum

  double max_diagonal() const;  // M_0
  double min_diagonal() const;
  // min_i 1 / M_ii
  double neighbors_from_diagonal() const { return 1.0 / max_diagonal(); }
  bool uniform_diagonal(double tol = 1e-9) const;
};

LocalAveragingMatrix m_matrix(const Spectrum& spec, double gamma);
LocalAveragingMatrix m_matrix(const GossipMatrix& w, double gamma);

/// beta = (1 - gamma lambda_2^2) / (1 + lambda_2), the constant with
/// I - W >= beta (I - M). Verifies that ordering with an explicit
/// eigendecomposition and throws NumericalError if it fails by more than 1e-8.
double beta(const GossipMatrix& w, double gamma);
double beta(const GossipMatrix& w, const Spectrum& spec, double gamma);

/// Stationary covariance of the averaged random walk,
/// C = sum_i lambda_i^2 / (1 - gamma lambda_i^2) v_i v_i^T.
Matrix random_walk_covariance(const Spectrum& spec, double gamma);
Matrix random_walk_covariance(const GossipMatrix& w, double gamma);

/// Inverse of the closed form: the decay at which n_W reaches `target`.
/// Bisection on [0, 1) using monotonicity of n_W. Throws InvalidArgument
/// when target lies outside [n_W(0), n) or W is disconnected.
double solve_gamma_for_neighbors(const Spectrum& spec, double target);

}  // namespace topodsgd
