#include "topodsgd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "topodsgd/error.hpp"
#include "topodsgd/parallel.hpp"

namespace topodsgd {

namespace {

constexpr double kDivergenceFactor = 1e12;

double second_eigenvalue(const Spectrum& spec) { return spec.size() < 2 ? 0.0 : spec.lambda2(); }

double require_smooth(const ConvexParams& params) {
  params.validate();
  if (!(params.L > 0.0)) throw InvalidArgument("smoothness L must be positive");
  return params.L;
}

// sum_ij a_ij <x_i, x_j> for n x d blocks.
double quadratic_form(const Matrix& a, const Matrix& x) {
  const std::size_t n = x.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      auto xj = x.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) dot += xi[k] * xj[k];
      s += aij * dot;
    }
  }
  return s;
}

}  // namespace

void ConvexParams::validate() const {
  if (!(mu >= 0.0)) throw InvalidArgument("mu must be >= 0");
  if (!(L >= mu)) throw InvalidArgument("L must be >= mu");
  if (!(zeta >= L)) throw InvalidArgument("zeta must be >= L");
  if (!(sigma2 >= 0.0)) throw InvalidArgument("sigma^2 must be >= 0");
  if (n == 0) throw InvalidArgument("n must be positive");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("communication probability p must lie in (0, 1)");
  if (omega && !(*omega > 0.0)) throw InvalidArgument("omega must be positive");
}

BoundNeighbors bound_neighbors(const Spectrum& spec, double gamma) {
  BoundNeighbors out;
  out.variance_ratio = effective_neighbors_closed(spec, gamma).value;
  const LocalAveragingMatrix m = m_matrix(spec, gamma);
  out.diagonal = m.neighbors_from_diagonal();
  out.irregular = !m.uniform_diagonal(1e-9);
  return out;
}

double lr_bound_main(const ConvexParams& params, const Spectrum& spec, double gamma) {
  const double L = require_smooth(params);
  require_decay(gamma);
  const double nw = bound_neighbors(spec, gamma).used();
  const double noise = 1.0 / (8.0 * (params.zeta / nw + L));
  const double closeness = (1.0 - gamma * second_eigenvalue(spec)) / (2.0 * nw * L);
  return std::min(noise, closeness);
}

GeneralBound lr_bound_general(const ConvexParams& params, const GossipMatrix& w, double gamma) {
  const double L = require_smooth(params);
  require_decay(gamma);
  const Spectrum spec = spectrum(w);
  GeneralBound out;
  out.m0 = m_matrix(spec, gamma).max_diagonal();
  out.beta = beta(w, spec, gamma);
  out.communication = out.m0 * out.beta / L * params.p / (1.0 - params.p);
  out.computation = 1.0 / (4.0 * (out.m0 * params.zeta + L));
  out.value = std::min(out.communication, out.computation);
  return out;
}

double convex_ergodic_bound(double p, double lyapunov0, double eta, std::size_t steps, double sigma_tilde2) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("p must lie in [0, 1)");
  if (!(eta > 0.0) || steps == 0) throw InvalidArgument("eta and steps must be positive");
  return lyapunov0 / ((1.0 - p) * eta * static_cast<double>(steps)) + eta * sigma_tilde2;
}

double corollary_lhs(const Spectrum& spec, double gamma) {
  const double nw = bound_neighbors(spec, gamma).used();
  return 2.0 * nw * nw / (1.0 - gamma * second_eigenvalue(spec));
}

double corollary_rhs(const ConvexParams& params) { return 16.0 * params.zeta / require_smooth(params); }

CorollaryChoice select_gamma_corollary(const ConvexParams& params, const Spectrum& spec) {
  const double rhs = corollary_rhs(params);
  const double n = static_cast<double>(spec.size());
  if (params.zeta < n * params.L * (1.0 - 1e-12)) {
    throw InvalidArgument("decay selection assumes zeta >= n L");
  }
  if (spec.size() < 2 || spec.lambda2() >= 1.0 - 1e-12) {
    throw InvalidArgument("decay selection needs a connected topology");
  }
  auto neighbors = [&](double g) { return bound_neighbors(spec, g).used(); };
  auto finish = [&](double g, bool cap) {
    CorollaryChoice out;
    out.gamma = g;
    out.n_eff = neighbors(g);
    out.eta = out.n_eff / (16.0 * params.zeta);
    out.cap_active = cap;
    out.constraint_lhs = corollary_lhs(spec, g);
    out.constraint_rhs = rhs;
    out.feasible = out.constraint_lhs <= rhs * (1.0 + 1e-12);
    return out;
  };

  // Smallest gamma where n_W has effectively saturated at n.
  const double saturated = n * (1.0 - 1e-6);
  const double top = kGammaLimit;
  std::optional<double> cap;
  if (neighbors(0.0) >= saturated) {
    cap = 0.0;
  } else if (neighbors(top) >= saturated) {
    double lo = 0.0;
    double hi = top;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (neighbors(mid) >= saturated ? hi : lo) = mid;
    }
    cap = hi;
  }
  if (corollary_lhs(spec, cap.value_or(top)) <= rhs) return finish(cap.value_or(top), true);
  if (corollary_lhs(spec, 0.0) > rhs) return finish(0.0, false);

  double lo = 0.0;
  double hi = cap.value_or(top);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (corollary_lhs(spec, mid) <= rhs ? lo : hi) = mid;
  }
  return finish(lo, false);
}

LyapunovValue lyapunov(const Matrix& x, const Matrix& x_star, const Matrix& m, double omega) {
  const std::size_t n = x.rows();
  if (!m.square() || m.rows() != n) throw InvalidArgument("Lyapunov: M must be n x n for an n-row iterate block");
  if (x_star.cols() != x.cols() || (x_star.rows() != n && x_star.rows() != 1)) {
    throw InvalidArgument("Lyapunov: minimizer shape does not match the iterates");
  }
  Matrix diff = x;
  for (std::size_t i = 0; i < n; ++i) {
    auto star = x_star.row(x_star.rows() == 1 ? 0 : i);
    auto row = diff.row(i);
    for (std::size_t k = 0; k < x.cols(); ++k) row[k] -= star[k];
  }
  Matrix complement = Matrix::identity(n) - m;
  LyapunovValue out;
  out.distance = quadratic_form(m, diff);
  out.consensus = omega * quadratic_form(complement, x);
  return out;
}

LyapunovTrace simulate_randomized_dsgd(const GossipMatrix& w, const RandomizedRunConfig& config) {
  require_decay(config.gamma);
  if (config.dim == 0 || config.steps == 0 || config.reps == 0) {
    throw InvalidArgument("dim, steps and reps must be positive");
  }
  if (!(config.eta >= 0.0) || !std::isfinite(config.eta)) throw InvalidArgument("learning rate must be >= 0");
  if (!(config.p > 0.0 && config.p < 1.0)) throw InvalidArgument("communication probability must lie in (0, 1)");

  const std::size_t n = w.size();
  const std::size_t d = config.dim;
  const std::size_t steps = config.steps;
  const Spectrum spec = spectrum(w);
  const Matrix m = m_matrix(spec, config.gamma).m;
  const Matrix complement = Matrix::identity(n) - m;
  const double omega = config.omega.value_or(1.0 / bound_neighbors(spec, config.gamma).used());
  const Matrix& wm = w.weights();

  Matrix dist(config.reps, steps + 1, std::numeric_limits<double>::quiet_NaN());
  Matrix cons(config.reps, steps + 1, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> blew_up(config.reps, steps + 1);

  parallel_for(config.reps, [&](std::size_t rep) {
    std::mt19937_64 rng(stream_seed(config.seed, rep));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    Matrix x(n, d);
    const double init_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : x.data()) v = init_scale * normal(rng);
    Matrix next(n, d);
    std::vector<double> a(d);

    auto gradient_step = [&] {
      for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        double proj = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          a[k] = normal(rng);
          proj += a[k] * xi[k];
        }
        const double s = config.eta * proj;
        for (std::size_t k = 0; k < d; ++k) xi[k] -= s * a[k];
      }
    };
    auto gossip_step = [&] {
      std::fill(next.data().begin(), next.data().end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto out = next.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          const double wij = wm(i, j);
          if (wij == 0.0) continue;
          auto xj = x.row(j);
          for (std::size_t k = 0; k < d; ++k) out[k] += wij * xj[k];
        }
      }
      std::swap(x, next);
    };
    auto record = [&](std::size_t t) {
      dist(rep, t) = quadratic_form(m, x);
      cons(rep, t) = omega * quadratic_form(complement, x);
    };

    record(0);
    const double limit = kDivergenceFactor * (dist(rep, 0) + cons(rep, 0));
    for (std::size_t t = 0; t < steps; ++t) {
      if (config.variant == DsgdVariant::Randomized) {
        if (coin(rng) < config.p) {
          gossip_step();
        } else {
          gradient_step();
        }
      } else {
        gradient_step();
        gossip_step();
      }
      record(t + 1);
      const double value = dist(rep, t + 1) + cons(rep, t + 1);
      if (!(value <= limit)) {
        blew_up[rep] = t + 1;
        return;
      }
    }
  });

  LyapunovTrace trace;
  trace.omega = omega;
  std::size_t length = steps + 1;
  const std::size_t first_blowup = *std::min_element(blew_up.begin(), blew_up.end());
  if (first_blowup <= steps) {
    trace.diverged = true;
    trace.diverged_at = first_blowup;
    length = first_blowup + 1;
  }

  const std::size_t reps = config.reps;
  trace.per_rep = Matrix(reps, length);
  trace.mean.resize(length);
  trace.standard_error.resize(length);
  trace.distance.resize(length);
  trace.consensus.resize(length);
  std::vector<double> col(reps);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t r = 0; r < reps; ++r) col[r] = dist(r, t);
    trace.distance[t] = pairwise_sum(col) / static_cast<double>(reps);
    for (std::size_t r = 0; r < reps; ++r) col[r] = cons(r, t);
    trace.consensus[t] = pairwise_sum(col) / static_cast<double>(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      col[r] = dist(r, t) + cons(r, t);
      trace.per_rep(r, t) = col[r];
    }
    const double mean = pairwise_sum(col) / static_cast<double>(reps);
    trace.mean[t] = mean;
    if (reps > 1) {
      for (double& v : col) v = (v - mean) * (v - mean);
      trace.standard_error[t] = std::sqrt(pairwise_sum(col) / static_cast<double>(reps - 1) / static_cast<double>(reps));
    }
  }
  return trace;
}

ContractionCheck check_contraction(const LyapunovTrace& trace, double factor, std::size_t burn_in) {
  ContractionCheck out;
  out.factor = factor;
  const std::size_t reps = trace.per_rep.rows();
  const std::size_t length = trace.mean.size();
  std::vector<double> resid(reps);
  for (std::size_t t = burn_in; t + 1 < length; ++t) {
    const double ratio = trace.mean[t + 1] / trace.mean[t];
    double se = 0.0;
    if (reps > 1) {
      for (std::size_t r = 0; r < reps; ++r) resid[r] = trace.per_rep(r, t + 1) - ratio * trace.per_rep(r, t);
      const double mean = pairwise_sum(resid) / static_cast<double>(reps);
      for (double& v : resid) v = (v - mean) * (v - mean);
      se = std::sqrt(pairwise_sum(resid) / static_cast<double>(reps - 1) / static_cast<double>(reps)) / trace.mean[t];
    }
    ++out.checked;
    if (ratio <= factor + 5.0 * se) ++out.satisfied;
  }
  return out;
}

}  // namespace topodsgd
