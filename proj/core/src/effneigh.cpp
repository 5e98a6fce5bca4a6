#include "topodsgd/effneigh.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "topodsgd/eigen_jacobi.hpp"
#include "topodsgd/error.hpp"
#include "topodsgd/parallel.hpp"

namespace topodsgd {

namespace {

constexpr std::size_t kRepsPerBlock = 32;

// Nonzero pattern of one gossip matrix, row by row.
struct SparseRows {
  std::vector<std::size_t> start;
  std::vector<std::size_t> col;
  std::vector<double> val;

  explicit SparseRows(const Matrix& w) {
    start.reserve(w.rows() + 1);
    start.push_back(0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        if (w(i, j) != 0.0) {
          col.push_back(j);
          val.push_back(w(i, j));
        }
      }
      start.push_back(col.size());
    }
  }

  void apply(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i + 1 < start.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = start[i]; k < start[i + 1]; ++k) s += val[k] * x[col[k]];
      out[i] = s;
    }
  }
};

struct WalkResult {
  std::vector<double> plain_mean_sq;     // per rep: mean_i y_i^2
  std::vector<double> averaged_mean_sq;  // per rep: mean_i z_i^2
  Matrix final_state;                    // reps x n, averaged walk
};

WalkResult run_walks(const TopologySchedule& schedule, double gamma, std::size_t steps, std::size_t reps,
                     std::uint64_t seed) {
  const std::size_t n = schedule.size();
  const double decay = std::sqrt(gamma);
  WalkResult out{std::vector<double>(reps), std::vector<double>(reps), Matrix(reps, n)};

  std::optional<SparseRows> fixed;
  if (schedule.is_static()) fixed.emplace(schedule.fixed().weights());

  const std::size_t blocks = (reps + kRepsPerBlock - 1) / kRepsPerBlock;
  parallel_for(blocks, [&](std::size_t block) {
    const std::size_t first = block * kRepsPerBlock;
    const std::size_t count = std::min(kRepsPerBlock, reps - first);
    std::vector<std::mt19937_64> rngs;
    rngs.reserve(count);
    for (std::size_t r = 0; r < count; ++r) rngs.emplace_back(stream_seed(seed, first + r));
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix y(count, n);
    Matrix z(count, n);
    std::vector<double> pre(n);
    for (std::size_t t = 0; t < steps; ++t) {
      std::optional<SparseRows> varying;
      if (!fixed) varying.emplace(schedule.at(t).weights());
      const SparseRows& w = fixed ? *fixed : *varying;
      for (std::size_t r = 0; r < count; ++r) {
        auto yr = y.row(r);
        auto zr = z.row(r);
        for (std::size_t i = 0; i < n; ++i) {
          const double xi = normal(rngs[r]);
          yr[i] = decay * yr[i] + xi;
          pre[i] = decay * zr[i] + xi;
        }
        w.apply(pre, zr);
      }
    }
    for (std::size_t r = 0; r < count; ++r) {
      double ys = 0.0;
      double zs = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ys += y(r, i) * y(r, i);
        zs += z(r, i) * z(r, i);
        out.final_state(first + r, i) = z(r, i);
      }
      out.plain_mean_sq[first + r] = ys / static_cast<double>(n);
      out.averaged_mean_sq[first + r] = zs / static_cast<double>(n);
    }
  });
  return out;
}

std::size_t resolve_steps(double gamma, std::size_t steps) {
  if (steps == 0) return burn_in_steps(gamma);
  if (gamma > 0.0 && std::pow(gamma, static_cast<double>(steps)) > 1e-6) {
    throw InvalidArgument("steps=" + std::to_string(steps) + " too short: gamma^steps must be <= 1e-6 (need " +
                          std::to_string(burn_in_steps(gamma)) + ")");
  }
  return steps;
}

// Diagonal of sum_i f(lambda_i) v_i v_i^T.
std::vector<double> spectral_diagonal(const Spectrum& spec, const std::vector<double>& f) {
  const std::size_t n = spec.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) d[i] += f[k] * spec.eigenvectors(i, k) * spec.eigenvectors(i, k);
  return d;
}

Matrix spectral_function(const Spectrum& spec, const std::vector<double>& f) {
  const std::size_t n = spec.size();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (f[k] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = f[k] * spec.eigenvectors(i, k);
      if (vi == 0.0) continue;
      auto row = out.row(i);
      for (std::size_t j = 0; j < n; ++j) row[j] += vi * spec.eigenvectors(j, k);
    }
  }
  // The expansion is symmetric in exact arithmetic; make it so in floating point.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = m;
      out(j, i) = m;
    }
  return out;
}

std::vector<double> walk_weights(const Spectrum& spec, double gamma) {
  std::vector<double> f(spec.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double l2 = spec.eigenvalues[k] * spec.eigenvalues[k];
    f[k] = l2 / (1.0 - gamma * l2);
  }
  return f;
}

double closed_form_value(const Spectrum& spec, double gamma) {
  const auto f = walk_weights(spec, gamma);
  double s = 0.0;
  for (double v : f) s += v;
  const double mean = s / static_cast<double>(spec.size());
  return (1.0 / (1.0 - gamma)) / mean;
}

}  // namespace

void require_decay(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw InvalidArgument("decay gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
}

const char* to_string(NeighborMethod m) {
  return m == NeighborMethod::ClosedForm ? "closed-form" : "monte-carlo";
}

EffectiveNeighbors effective_neighbors_closed(const Spectrum& spec, double gamma) {
  require_decay(gamma);
  if (spec.size() == 0) throw InvalidArgument("effective neighbors of an empty spectrum");
  EffectiveNeighbors out;
  out.value = closed_form_value(spec, gamma);
  out.gamma = gamma;
  out.method = NeighborMethod::ClosedForm;
  out.per_worker_variance = spectral_diagonal(spec, walk_weights(spec, gamma));
  return out;
}

EffectiveNeighbors effective_neighbors_limit(const Spectrum& spec) {
  EffectiveNeighbors out = effective_neighbors_closed(spec, kGammaLimit);
  out.limit_approximation = true;
  return out;
}

bool has_uniform_variance(const Spectrum& spec, double gamma) {
  const auto d = spectral_diagonal(spec, walk_weights(spec, gamma));
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  return *hi - *lo <= 1e-9 * std::abs(*hi);
}

double effective_neighbors_transition(const Spectrum& spec, double gamma) {
  require_decay(gamma);
  const std::size_t n = spec.size();
  if (n == 0) throw InvalidArgument("effective neighbors of an empty spectrum");
  if (has_uniform_variance(spec, gamma)) return closed_form_value(spec, gamma);

  // c_kl = lambda_k lambda_l / (1 - gamma lambda_k lambda_l)
  Matrix c(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const double p = spec.eigenvalues[k] * spec.eigenvalues[l];
      c(k, l) = p / (1.0 - gamma * p);
    }
  // G_ij = sum_kl c_kl (v_k(i) v_k(j)) (v_l(i) v_l(j))
  Matrix g(n, n);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) p[k] = spec.eigenvectors(i, k) * spec.eigenvectors(j, k);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (p[k] == 0.0) continue;
        double inner = 0.0;
        auto ck = c.row(k);
        for (std::size_t l = 0; l < n; ++l) inner += ck[l] * p[l];
        s += p[k] * inner;
      }
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  const double perron = jacobi_eigen(g).values.front();
  return 1.0 / ((1.0 - gamma) * perron);
}

std::size_t burn_in_steps(double gamma) {
  require_decay(gamma);
  if (gamma == 0.0) return 100;
  const double raw = std::ceil(std::log(1e-6) / std::log(gamma));
  return static_cast<std::size_t>(std::clamp(raw, 100.0, 1e6));
}

EffectiveNeighbors effective_neighbors_montecarlo(const TopologySchedule& schedule, double gamma,
                                                  std::size_t steps, std::size_t reps, std::uint64_t seed) {
  require_decay(gamma);
  if (reps == 0) throw InvalidArgument("reps must be positive");
  steps = resolve_steps(gamma, steps);

  const WalkResult walks = run_walks(schedule, gamma, steps, reps, seed);
  const double plain = pairwise_sum(walks.plain_mean_sq) / static_cast<double>(reps);
  const double averaged = pairwise_sum(walks.averaged_mean_sq) / static_cast<double>(reps);
  const double ratio = plain / averaged;

  double se = 0.0;
  if (reps > 1) {
    std::vector<double> resid(reps);
    for (std::size_t r = 0; r < reps; ++r) resid[r] = walks.plain_mean_sq[r] - ratio * walks.averaged_mean_sq[r];
    const double mean = pairwise_sum(resid) / static_cast<double>(reps);
    for (double& v : resid) v = (v - mean) * (v - mean);
    const double var = pairwise_sum(resid) / static_cast<double>(reps - 1);
    se = std::sqrt(var / static_cast<double>(reps)) / averaged;
  }

  const std::size_t n = schedule.size();
  std::vector<double> per_worker(n);
  std::vector<double> column(reps);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < reps; ++r) column[r] = walks.final_state(r, i) * walks.final_state(r, i);
    per_worker[i] = pairwise_sum(column) / static_cast<double>(reps);
  }

  EffectiveNeighbors out;
  out.value = ratio;
  out.gamma = gamma;
  out.method = NeighborMethod::MonteCarlo;
  out.standard_error = se;
  out.per_worker_variance = std::move(per_worker);
  return out;
}

Matrix sample_random_walk(const TopologySchedule& schedule, double gamma, std::size_t steps, std::size_t reps,
                          std::uint64_t seed) {
  require_decay(gamma);
  if (reps == 0) throw InvalidArgument("reps must be positive");
  steps = resolve_steps(gamma, steps);
  return run_walks(schedule, gamma, steps, reps, seed).final_state;
}

double LocalAveragingMatrix::max_diagonal() const {
  const auto d = m.diagonal();
  return *std::max_element(d.begin(), d.end());
}

double LocalAveragingMatrix::min_diagonal() const {
  const auto d = m.diagonal();
  return *std::min_element(d.begin(), d.end());
}

bool LocalAveragingMatrix::uniform_diagonal(double tol) const { return max_diagonal() - min_diagonal() <= tol; }

LocalAveragingMatrix m_matrix(const Spectrum& spec, double gamma) {
  require_decay(gamma);
  std::vector<double> mu(spec.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double l2 = spec.eigenvalues[k] * spec.eigenvalues[k];
    mu[k] = (1.0 - gamma) * l2 / (1.0 - gamma * l2);
  }
  LocalAveragingMatrix out;
  out.m = spectral_function(spec, mu);
  out.gamma = gamma;
  out.eigenvalues = std::move(mu);
  return out;
}

LocalAveragingMatrix m_matrix(const GossipMatrix& w, double gamma) { return m_matrix(spectrum(w), gamma); }

double beta(const GossipMatrix& w, const Spectrum& spec, double gamma) {
  require_decay(gamma);
  if (spec.size() < 2) return 1.0;  // I - W = I - M = 0
  const double l2 = spec.lambda2();
  const double b = (1.0 - gamma * l2 * l2) / (1.0 + l2);

  const std::size_t n = w.size();
  const LocalAveragingMatrix m = m_matrix(spec, gamma);
  Matrix gap(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double id = i == j ? 1.0 : 0.0;
      gap(i, j) = (id - w(i, j)) - b * (id - m.m(i, j));
    }
  const double smallest = jacobi_eigen(gap).values.back();
  if (smallest < -1e-8) {
    throw NumericalError("beta verification failed: lambda_min(I - W - beta (I - M)) = " + std::to_string(smallest));
  }
  return b;
}

double beta(const GossipMatrix& w, double gamma) { return beta(w, spectrum(w), gamma); }

Matrix random_walk_covariance(const Spectrum& spec, double gamma) {
  require_decay(gamma);
  return spectral_function(spec, walk_weights(spec, gamma));
}

Matrix random_walk_covariance(const GossipMatrix& w, double gamma) {
  return random_walk_covariance(spectrum(w), gamma);
}

double solve_gamma_for_neighbors(const Spectrum& spec, double target) {
  const double n = static_cast<double>(spec.size());
  if (spec.size() < 2 || spec.lambda2() >= 1.0 - 1e-12) {
    throw InvalidArgument("solve_gamma_for_neighbors needs a connected topology");
  }
  const double at_zero = closed_form_value(spec, 0.0);
  const double tol = 1e-6 * target;
  if (!(target >= at_zero - tol && target < n)) {
    throw InvalidArgument("target " + std::to_string(target) + " outside achievable range [" +
                          std::to_string(at_zero) + ", " + std::to_string(n) + ")");
  }
  if (std::abs(at_zero - target) <= tol) return 0.0;

  double lo = 0.0;
  double hi = kGammaLimit;
  if (closed_form_value(spec, hi) < target) {
    throw InvalidArgument("target " + std::to_string(target) + " not reachable below gamma = " + std::to_string(hi));
  }
  for (int iter = 0; iter < 2000 && hi - lo > 0.0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (closed_form_value(spec, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double best = std::abs(closed_form_value(spec, lo) - target) <= std::abs(closed_form_value(spec, hi) - target)
                          ? lo
                          : hi;
  if (std::abs(closed_form_value(spec, best) - target) > tol) {
    throw NumericalError("bisection for gamma did not reach the target tolerance");
  }
  return best;
}

}  // namespace topodsgd
