#include "topodsgd/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>

#include "topodsgd/effneigh.hpp"
#include "topodsgd/error.hpp"
#include "topodsgd/parallel.hpp"

namespace topodsgd {

namespace {

void require_rate_inputs(double eta, double zeta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("learning rate must be positive");
  if (!(zeta >= 1.0) || !std::isfinite(zeta)) throw InvalidArgument("noise level zeta must be >= 1");
}

constexpr double kDamping = 0.5;
constexpr std::size_t kMaxIterations = 100000;
constexpr std::size_t kDampedBudget = 2000;

// Right-hand side of the rate equation, for r < 1 - a.
struct RateEquation {
  double a;  // (1 - eta)^2
  double b;  // (zeta - 1) eta^2
  const Spectrum& spec;

  double gamma_at(double r) const {
    const double g = a / (1.0 - r);
    return std::min(g, std::nextafter(1.0, 0.0));
  }
  double neighbors(double r) const { return effective_neighbors_transition(spec, gamma_at(r)); }
  double rhs(double r) const { return 1.0 - a - b / neighbors(r); }
};

}  // namespace

double rate_alone(double eta, double zeta) {
  const double step = 1.0 - eta;
  return 1.0 - step * step - (zeta - 1.0) * eta * eta;
}

double rate_centralized(double eta, double zeta, std::size_t n) {
  const double step = 1.0 - eta;
  return 1.0 - step * step - (zeta - 1.0) * eta * eta / static_cast<double>(n);
}

RateSolution rate_decentralized(double eta, double zeta, const Spectrum& spec) {
  require_rate_inputs(eta, zeta);
  if (spec.size() == 0) throw InvalidArgument("empty spectrum");
  const double step = 1.0 - eta;
  const RateEquation eq{step * step, (zeta - 1.0) * eta * eta, spec};
  const std::size_t n = spec.size();

  RateSolution sol;
  if (eq.b == 0.0) {
    // Noise-free: averaging is irrelevant and the rate is the deterministic one.
    sol.rate = 1.0 - eq.a;
    sol.gamma_star = eq.a > 0.0 ? 1.0 : 0.0;
    sol.n_eff = eq.a > 0.0 ? effective_neighbors_closed(spec, kGammaLimit).value : effective_neighbors_transition(spec, 0.0);
    sol.diverged = sol.rate <= 0.0;
    return sol;
  }
  if (eq.a == 0.0) {
    sol.n_eff = effective_neighbors_transition(spec, 0.0);
    sol.rate = 1.0 - eq.b / sol.n_eff;
    sol.gamma_star = 0.0;
    sol.diverged = sol.rate <= 0.0;
    sol.iterations = 1;
    return sol;
  }

  const double upper = 1.0 - eq.a;  // gamma -> 1
  double r = rate_centralized(eta, zeta, n);
  bool converged = false;
  double prev_step = std::numeric_limits<double>::infinity();
  int growing = 0;
  int flips = 0;
  double prev_sign = 0.0;
  for (std::size_t it = 0; it < std::min(kDampedBudget, kMaxIterations); ++it) {
    const double target = eq.rhs(r);
    const double delta = target - r;
    sol.iterations = it + 1;
    if (std::abs(delta) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r))) {
      r = target;
      converged = true;
      break;
    }
    const double sign = delta > 0.0 ? 1.0 : -1.0;
    if (prev_sign != 0.0 && sign != prev_sign) ++flips;
    prev_sign = sign;
    growing = std::abs(delta) >= prev_step ? growing + 1 : 0;
    prev_step = std::abs(delta);
    if (flips > 8 || growing > 3) break;
    r = (1.0 - kDamping) * r + kDamping * target;
    r = std::min(r, std::nextafter(upper, -std::numeric_limits<double>::infinity()));
  }

  if (!converged) {
    // residual g(r) = r - rhs(r) is increasing; g < 0 well below 1 - a - b and
    // g -> b / n > 0 as r -> 1 - a.
    sol.used_bisection = true;
    double lo = upper - eq.b - 1.0;
    double hi = upper;
    for (std::size_t it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (mid - eq.rhs(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++sol.iterations;
    }
    r = std::abs(lo - eq.rhs(lo)) <= std::abs(hi - eq.rhs(hi)) || hi >= upper ? lo : hi;
  }

  const double residual = std::abs(r - eq.rhs(r));
  if (!(residual <= 1e-10)) {
    throw NumericalError("rate fixed point did not converge (residual " + std::to_string(residual) + ")");
  }
  sol.rate = r;
  sol.gamma_star = eq.a / (1.0 - r);
  sol.n_eff = eq.neighbors(r);
  sol.diverged = r <= 0.0;
  return sol;
}

double transition_rate_oracle(const GossipMatrix& w, double eta, double zeta) {
  require_rate_inputs(eta, zeta);
  const std::size_t n = w.size();
  if (n > 64) throw InvalidArgument("transition oracle is limited to n <= 64");
  const double step = 1.0 - eta;
  const double cross = step * step;
  const double same = cross + (zeta - 1.0) * eta * eta;
  const double root_cross = std::sqrt(cross);
  const double root_same = std::sqrt(same);
  const Matrix& wm = w.weights();

  auto scale = [&](Matrix& e) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e(i, j) *= (i == j ? root_same : root_cross);
  };
  auto apply = [&](const Matrix& e) {
    Matrix f = e;
    scale(f);
    Matrix out = wm * f * wm;
    scale(out);
    return out;
  };
  auto dot = [](const Matrix& x, const Matrix& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.data().size(); ++k) s += x.data()[k] * y.data()[k];
    return s;
  };

  Matrix e(n, n, 1.0 / static_cast<double>(n));
  double theta = 0.0;
  double prev_change = 0.0;
  constexpr std::size_t kMaxPower = 1000000;
  for (std::size_t it = 0; it < kMaxPower; ++it) {
    Matrix next = apply(e);
    const double next_theta = dot(e, next);  // e has unit norm
    const double norm = std::sqrt(dot(next, next));
    if (!(norm > 0.0)) return 1.0;  // T annihilates everything: rho = 0
    Matrix residual = next - e * next_theta;
    const double res_norm = frobenius_norm(residual);
    const double change = std::abs(next_theta - theta);
    // Rayleigh-quotient error ~ change * q / (1 - q) with q the observed
    // contraction of successive changes.
    double error_estimate = change;
    if (prev_change > 0.0 && change < prev_change) {
      const double q = change / prev_change;
      error_estimate = change * q / (1.0 - q);
    }
    theta = next_theta;
    next *= 1.0 / norm;
    e = std::move(next);
    if (it > 2 && (res_norm <= 1e-12 * std::abs(theta) ||
                   (error_estimate <= 1e-14 * std::abs(theta) && change <= 1e-12 * std::abs(theta)))) {
      return 1.0 - theta;
    }
    prev_change = change;
  }
  throw NumericalError("transition oracle: power iteration did not converge");
}

OptimalLearningRate optimal_lr(double zeta, const Spectrum& spec) {
  if (!(zeta >= 1.0)) throw InvalidArgument("noise level zeta must be >= 1");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto rate = [&](double eta) { return rate_decentralized(eta, zeta, spec).rate; };

  double lo = 1e-6;
  double hi = 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = rate(x1);
  double f2 = rate(x2);
  while (hi - lo > 1e-8) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = rate(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = rate(x2);
    }
  }
  OptimalLearningRate out;
  out.eta = 0.5 * (lo + hi);
  out.rate = rate(out.eta);
  if (!(out.rate > 0.0)) throw InvalidArgument("no convergent learning rate in [1e-6, 2]");
  return out;
}

SimTrace simulate_dsgd(const ToyProblem& problem, std::size_t steps, std::size_t reps, std::uint64_t seed) {
  if (steps == 0) throw InvalidArgument("steps must be positive");
  if (reps == 0) throw InvalidArgument("reps must be positive");
  if (problem.dim == 0) throw InvalidArgument("dimension must be positive");
  if (!(problem.eta >= 0.0) || !std::isfinite(problem.eta)) throw InvalidArgument("learning rate must be >= 0");

  const std::size_t n = problem.schedule.size();
  const std::size_t d = problem.dim;
  const double eta = problem.eta;
  Matrix per_rep(reps, steps + 1);

  const Matrix* fixed = problem.schedule.is_static() ? &problem.schedule.fixed().weights() : nullptr;

  parallel_for(reps, [&](std::size_t rep) {
    std::mt19937_64 rng(stream_seed(seed, rep));
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> x0(d);
    double norm2 = 0.0;
    for (double& v : x0) {
      v = normal(rng);
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : x0) v *= inv;

    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) std::copy(x0.begin(), x0.end(), x.row(i).begin());
    Matrix next(n, d);
    std::vector<double> a(d);

    auto record = [&](std::size_t t) {
      double s = 0.0;
      for (double v : x.data()) s += v * v;
      per_rep(rep, t) = s;
    };
    record(0);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        double proj = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          a[k] = normal(rng);
          proj += a[k] * xi[k];
        }
        const double scale = eta * proj;
        for (std::size_t k = 0; k < d; ++k) xi[k] -= scale * a[k];
      }
      std::optional<GossipMatrix> varying;
      if (!fixed) varying.emplace(problem.schedule.at(t));
      const Matrix& w = fixed ? *fixed : varying->weights();
      std::fill(next.data().begin(), next.data().end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto out = next.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          const double wij = w(i, j);
          if (wij == 0.0) continue;
          auto xj = x.row(j);
          for (std::size_t k = 0; k < d; ++k) out[k] += wij * xj[k];
        }
      }
      std::swap(x, next);
      record(t + 1);
    }
  });

  SimTrace trace;
  trace.values.resize(steps + 1);
  std::vector<double> column(reps);
  for (std::size_t t = 0; t <= steps; ++t) {
    for (std::size_t r = 0; r < reps; ++r) column[r] = per_rep(r, t);
    trace.values[t] = pairwise_sum(column) / static_cast<double>(reps);
  }
  trace.seed = seed;
  trace.reps = reps;
  trace.eta = eta;
  trace.topology = problem.schedule.label();
  return trace;
}

double fit_empirical_rate(const SimTrace& trace, std::size_t t0, std::size_t t1) {
  if (!(t1 > t0 && t0 >= 1)) throw InvalidArgument("fit window needs t1 > t0 >= 1");
  if (t1 >= trace.values.size()) throw InvalidArgument("fit window extends past the trace");
  const std::size_t count = t1 - t0 + 1;
  double mean_t = 0.0;
  double mean_y = 0.0;
  std::vector<double> logs(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double v = trace.values[t0 + k];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("trace value at step " + std::to_string(t0 + k) + " is not positive and finite");
    }
    logs[k] = std::log(v);
    mean_t += static_cast<double>(k);
    mean_y += logs[k];
  }
  mean_t /= static_cast<double>(count);
  mean_y /= static_cast<double>(count);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double dt = static_cast<double>(k) - mean_t;
    sxy += dt * (logs[k] - mean_y);
    sxx += dt * dt;
  }
  return 1.0 - std::exp(sxy / sxx);
}

double fit_empirical_rate(const SimTrace& trace) {
  const std::size_t steps = trace.steps();
  const std::size_t window = (steps * 6) / 10;
  if (window < 1) throw InvalidArgument("trace too short for the default fit window");
  return fit_empirical_rate(trace, steps - window, steps);
}

std::vector<TimeToTarget> time_to_target(double zeta, const Spectrum& spec, double target_ratio,
                                         const std::vector<double>& etas) {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) throw InvalidArgument("target ratio must lie in (0, 1]");
  std::vector<TimeToTarget> out;
  out.reserve(etas.size());
  for (double eta : etas) {
    TimeToTarget row;
    row.eta = eta;
    row.solution = rate_decentralized(eta, zeta, spec);
    const double r = row.solution.rate;
    if (row.solution.diverged) {
      row.steps = std::numeric_limits<double>::infinity();
    } else if (target_ratio == 1.0) {
      row.steps = 0.0;
    } else if (r >= 1.0) {
      row.steps = 1.0;
    } else {
      row.steps = std::ceil(std::log(target_ratio) / std::log1p(-r));
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace topodsgd
