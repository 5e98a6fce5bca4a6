#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "topodsgd/effneigh.hpp"
#include "topodsgd/matrix.hpp"
#include "topodsgd/topology.hpp"

namespace topodsgd {

/// Constants of the stochastic strongly-convex setting.
struct ConvexParams {
  double mu = 1.0;      // strong convexity of f
  double L = 1.0;       // smoothness of f
  double zeta = 1.0;    // smoothness of the sampled functions
  double sigma2 = 0.0;  // gradient variance at the optimum
  std::size_t n = 1;
  double p = 0.5;       // probability of a communication step
  std::optional<double> omega;  // Lyapunov weight; defaulted per use site

  // Throws InvalidArgument unless L >= mu >= 0, zeta >= L, sigma2 >= 0, 0 < p < 1.
  void validate() const;
};

/// Effective neighbors as used by the bounds. On graphs whose M has a
/// non-constant diagonal (tolerance 1e-9) the bounds use min_i 1/M_ii
/// instead of the variance ratio; both are reported.
struct BoundNeighbors {
  double variance_ratio = 1.0;  // closed-form n_W(gamma)
  double diagonal = 1.0;        // min_i 1 / M_ii
  bool irregular = false;
  double used() const { return irregular ? diagonal : variance_ratio; }
};

BoundNeighbors bound_neighbors(const Spectrum& spec, double gamma);

/// min( 1 / (8 (zeta / n_W + L)), (1 - gamma lambda_2) / (2 n_W L) ).
double lr_bound_main(const ConvexParams& params, const Spectrum& spec, double gamma);

struct GeneralBound {
  double value = 0.0;
  double communication = 0.0;  // M_0 beta / L * p / (1 - p)
  double computation = 0.0;    // 1 / (4 (M_0 zeta + L))
  double m0 = 0.0;
  double beta = 0.0;
};

/// Learning-rate bound for communication probability p with omega = M_0:
/// min( M_0 beta / L * p/(1-p), 1 / (4 (M_0 zeta + L)) ).
GeneralBound lr_bound_general(const ConvexParams& params, const GossipMatrix& w, double gamma);

/// Ergodic-average bound for mu = 0: L_0 / ((1 - p) eta T) + eta sigma_tilde^2.
double convex_ergodic_bound(double p, double lyapunov0, double eta, std::size_t steps, double sigma_tilde2);

// Left side of the decay-selection constraint, 2 n_W(gamma)^2 / (1 - gamma lambda_2),
// and its right side, 16 zeta / L.
double corollary_lhs(const Spectrum& spec, double gamma);
double corollary_rhs(const ConvexParams& params);

struct CorollaryChoice {
  double gamma = 0.0;
  double n_eff = 1.0;
  double eta = 0.0;          // n_W(gamma) / (16 zeta)
  bool cap_active = false;   // n_W within 1e-6 n of n, or gamma at kGammaLimit
  bool feasible = true;      // constraint holds at the returned gamma
  double constraint_lhs = 0.0;
  double constraint_rhs = 0.0;
};

/// Largest decay gamma whose effective neighbors still satisfy the
/// closeness constraint, so that the noise term of lr_bound_main binds.
/// Requires zeta >= n L and a connected graph.
CorollaryChoice select_gamma_corollary(const ConvexParams& params, const Spectrum& spec);

struct LyapunovValue {
  double distance = 0.0;   // ||x - x*||_M^2
  double consensus = 0.0;  // omega ||x||_{I-M}^2
  double value() const { return distance + consensus; }
};

/// Quadratic forms summed over model coordinates: x is n x d, x_star is
/// n x d or 1 x d (broadcast to every worker).
LyapunovValue lyapunov(const Matrix& x, const Matrix& x_star, const Matrix& m, double omega);

enum class DsgdVariant {
  Randomized,     // coin flip per step: all workers take a gradient step, or gossip
  Deterministic,  // gradient step then gossip, every step
};

struct RandomizedRunConfig {
  std::size_t dim = 200;  // isotropic quadratic: mu = L = 1, zeta = dim + 2, sigma^2 = 0
  double gamma = 0.0;
  double eta = 0.0;
  double p = 0.5;
  std::optional<double> omega;  // default 1 / n_W(gamma)
  std::size_t steps = 1000;
  std::size_t reps = 100;
  std::uint64_t seed = 42;
  DsgdVariant variant = DsgdVariant::Randomized;
};

struct LyapunovTrace {
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<double> distance;   // rep-mean distance term
  std::vector<double> consensus;  // rep-mean consensus term
  // Per-rep values, reps x (steps + 1), kept for one-step ratio statistics.
  Matrix per_rep;
  double omega = 0.0;
  bool diverged = false;
  std::size_t diverged_at = 0;
};

/// Simulates D-SGD on the noise-free-at-optimum isotropic quadratic
/// (x* = 0) with workers started at independent random points of unit
/// expected norm, recording the Lyapunov function every step. A run stops
/// early and sets `diverged` once any rep exceeds 1e12 L_0.
LyapunovTrace simulate_randomized_dsgd(const GossipMatrix& w, const RandomizedRunConfig& config);

struct ContractionCheck {
  double factor = 1.0;           // 1 - (1 - p) eta mu / 2
  std::size_t checked = 0;
  std::size_t satisfied = 0;
  double fraction() const { return checked == 0 ? 0.0 : static_cast<double>(satisfied) / checked; }
};

/// One-step contraction of the rep-mean Lyapunov after `burn_in`: step t
/// passes when mean[t+1] / mean[t] <= factor + 5 se, with se the delta-method
/// standard error of that ratio of means.
ContractionCheck check_contraction(const LyapunovTrace& trace, double factor, std::size_t burn_in);

}  // namespace topodsgd
