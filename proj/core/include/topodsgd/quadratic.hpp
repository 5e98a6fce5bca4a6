#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "topodsgd/topology.hpp"

namespace topodsgd {

// Isotropic random quadratic in dimension d: f(x) = E[(a^T x)^2] / 2 with
// a ~ N(0, I_d). Stochastic gradients a a^T x; noise level zeta = d + 2.
inline double noise_level(std::size_t dim) { return static_cast<double>(dim) + 2.0; }

/// 1 - (1 - eta)^2 - (zeta - 1) eta^2. Negative means divergence.
double rate_alone(double eta, double zeta);

/// 1 - (1 - eta)^2 - (zeta - 1) eta^2 / n.
double rate_centralized(double eta, double zeta, std::size_t n);

struct RateSolution {
  double rate = 0.0;
  double gamma_star = 0.0;  // (1 - eta)^2 / (1 - rate)
  double n_eff = 1.0;       // effective neighbors at gamma_star
  bool diverged = false;    // rate <= 0
  std::size_t iterations = 0;
  bool used_bisection = false;
};

/// Exact asymptotic rate of D-SGD on the isotropic quadratic for a static
/// gossip matrix: the root of
///   r = 1 - (1 - eta)^2 - (zeta - 1) eta^2 / n_W((1 - eta)^2 / (1 - r)).
///
/// n_W here is effective_neighbors_transition, which equals the closed form
/// on graphs with uniform random-walk variance and stays exact on irregular
/// ones. Solved by damped iteration (theta = 0.5) from rate_centralized,
/// switching to bisection on the residual if the iteration oscillates or
/// stalls. Throws NumericalError if the final residual exceeds 1e-10.
RateSolution rate_decentralized(double eta, double zeta, const Spectrum& spec);

/// 1 - rho(T) for the n^2 x n^2 covariance transition T = (W (x) W) T_grad,
/// where T_grad scales same-worker entries by (1-eta)^2 + (zeta-1) eta^2 and
/// cross-worker entries by (1-eta)^2. rho is found by power iteration on the
/// symmetrized operator D^{1/2} (W (x) W) D^{1/2}, applied matrix-free.
/// Requires n <= 64.
double transition_rate_oracle(const GossipMatrix& w, double eta, double zeta);

struct OptimalLearningRate {
  double eta = 0.0;
  double rate = 0.0;
};

/// Golden-section maximization of rate_decentralized over eta in [1e-6, 2]
/// down to |d eta| <= 1e-8.
OptimalLearningRate optimal_lr(double zeta, const Spectrum& spec);

struct ToyProblem {
  std::size_t dim = 1;
  TopologySchedule schedule;
  double eta = 0.0;

  double zeta() const { return noise_level(dim); }
};

/// Rep-averaged sum over workers of squared iterate norms; values[t] for
/// t = 0..steps.
struct SimTrace {
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  double eta = 0.0;
  std::string topology;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
};

/// Monte-Carlo D-SGD on the toy problem: every worker starts from the same
/// random unit vector (drawn per rep), then each step does
/// x_i <- x_i - eta a_i a_i^T x_i with fresh a_i ~ N(0, I_d), followed by
/// gossip x <- W_t x. Reps run in parallel on streams keyed by (seed, rep).
SimTrace simulate_dsgd(const ToyProblem& problem, std::size_t steps, std::size_t reps, std::uint64_t seed);

/// 1 - exp(slope) of a least-squares line through log(values[t]) for
/// t in [t0, t1]. Throws InvalidArgument on nonpositive or non-finite values.
double fit_empirical_rate(const SimTrace& trace, std::size_t t0, std::size_t t1);
// Default window: the last 60% of steps.
double fit_empirical_rate(const SimTrace& trace);

struct TimeToTarget {
  double eta = 0.0;
  double steps = 0.0;  // +inf when diverged
  RateSolution solution;
};

/// Steps ceil(log(target_ratio) / log(1 - r(eta))) to shrink the error by
/// target_ratio, from the predicted rate at each eta.
std::vector<TimeToTarget> time_to_target(double zeta, const Spectrum& spec, double target_ratio,
                                         const std::vector<double>& etas);

}  // namespace topodsgd
