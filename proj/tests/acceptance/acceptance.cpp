// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "topodsgd/covfit.hpp"
#include "topodsgd/csv.hpp"
#include "topodsgd/effneigh.hpp"
#include "topodsgd/quadratic.hpp"
#include "topodsgd/theory.hpp"
#include "topodsgd/topology.hpp"

using namespace topodsgd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1
Outcome spectral_gaps() {
  Outcome o;
  struct Case {
    const char* spec;
    double expected, tol;
  } cases[] = {{"ring:32", 0.013, 5e-4}, {"star:32", 0.031, 5e-4}, {"ring:64", 0.0032, 2e-4}, {"star:64", 0.0156, 5e-4}};
  std::string values;
  for (const auto& c : cases) {
    const double gap = spectral_gap(build_topology(c.spec));
    values += std::string(c.spec) + "=" + fmt("%.5f ", gap);
    o.require(std::abs(gap - c.expected) <= c.tol, std::string(c.spec) + fmt(" gap %.6f", gap));
  }
  if (o.pass) o.detail = values;
  return o;
}

// 2
Outcome neighbor_endpoints() {
  Outcome o;
  double worst = 0;
  for (double g : {0.0, 0.5, 0.99}) {
    for (std::size_t n : {8u, 32u}) {
      const double full = effective_neighbors_closed(spectrum(build_topology("fully_connected:" + std::to_string(n))), g).value;
      const double none = effective_neighbors_closed(spectrum(build_topology("disconnected:" + std::to_string(n))), g).value;
      worst = std::max({worst, std::abs(full - n), std::abs(none - 1.0)});
    }
  }
  o.require(worst <= 1e-9, fmt("endpoint error %.3g", worst));
  const Spectrum ring = spectrum(build_topology("ring:32"));
  const double at0 = effective_neighbors_closed(ring, 0.0).value;
  o.require(std::abs(at0 - 3.0) <= 1e-9, fmt("ring n_W(0) = %.12f", at0));
  const double near1 = effective_neighbors_closed(ring, 1.0 - 1e-6).value;
  o.require(near1 >= 31.5, fmt("ring:32 n_W(1-1e-6) = %.4f", near1));
  if (o.pass) o.detail = fmt("max endpoint error %.2g, ring:32 n_W(0)=%.12g, n_W(1-1e-6)=%.4f", worst, at0, near1);
  return o;
}

// 3
Outcome monte_carlo_neighbors() {
  Outcome o;
  double worst = 0;
  for (const char* spec : {"ring:8", "star:8", "torus:4x8"}) {
    const GossipMatrix w = build_topology(spec);
    for (double g : {0.5, 0.9}) {
      const auto mc = effective_neighbors_montecarlo(TopologySchedule(w), g, 0, 2000, 42);
      const double exact = effective_neighbors_closed(spectrum(w), g).value;
      const double z = std::abs(mc.value - exact) / mc.standard_error;
      worst = std::max(worst, z);
      o.require(z <= 3.0, std::string(spec) + fmt(" gamma %.2f: %.2f standard errors", g, z));
    }
  }
  if (o.pass) o.detail = fmt("largest deviation %.2f standard errors", worst);
  return o;
}

// 4
Outcome exponential_exactness() {
  Outcome o;
  double worst = 0;
  for (std::size_t n : {4u, 8u, 32u}) {
    const TopologySchedule s = exponential_schedule(n);
    const std::size_t k = static_cast<std::size_t>(std::log2(static_cast<double>(n)));
    for (std::size_t start = 0; start < k; ++start) {
      Matrix p = Matrix::identity(n);
      for (std::size_t t = start; t < start + k; ++t) p = p * s.at(t).weights();
      worst = std::max(worst, max_abs_diff(p, Matrix::constant(n, n, 1.0 / static_cast<double>(n))));
    }
  }
  o.require(worst <= 1e-12, fmt("max deviation %.3g", worst));
  if (o.pass) o.detail = fmt("max deviation from uniform %.2g", worst);
  return o;
}

std::vector<std::string> builtin_topologies_up_to(std::size_t max_n) {
  std::vector<std::string> specs;
  for (const char* family : {"ring", "chain", "star", "binary_tree", "fully_connected", "disconnected"})
    for (std::size_t n = 1; n <= max_n; ++n) specs.push_back(std::string(family) + ":" + std::to_string(n));
  for (std::size_t r = 3; r * 3 <= max_n; ++r)
    for (std::size_t c = 3; r * c <= max_n; ++c) specs.push_back("torus:" + std::to_string(r) + "x" + std::to_string(c));
  for (std::size_t n = 1; n <= max_n; n *= 2) specs.push_back("hypercube:" + std::to_string(n));
  return specs;
}

// 5
Outcome fixed_point_vs_oracle() {
  Outcome o;
  double worst = 0;
  std::size_t cases = 0;
  for (const auto& spec : builtin_topologies_up_to(16)) {
    const GossipMatrix w = build_topology(spec);
    const Spectrum s = spectrum(w);
    for (double eta : {0.02, 0.1, 0.3})
      for (double zeta : {6.0, 22.0}) {
        const RateSolution r = rate_decentralized(eta, zeta, s);
        const double oracle = transition_rate_oracle(w, eta, zeta);
        const double err = std::abs(r.rate - oracle);
        worst = std::max(worst, err);
        ++cases;
        o.require(err <= 1e-8, spec + fmt(" eta %.2f zeta %.0f: |diff| %.3g", eta, zeta, err));
        o.require(r.diverged == (oracle <= 0.0), spec + " divergence verdicts differ");
      }
  }
  if (o.pass) o.detail = std::to_string(cases) + fmt(" cases, max |diff| %.2g", worst);
  return o;
}

// 6
Outcome special_cases() {
  Outcome o;
  const Spectrum id = spectrum(build_topology("disconnected:8"));
  const Spectrum full = spectrum(build_topology("fully_connected:8"));
  double worst = 0;
  for (double zeta : {6.0, 22.0, 102.0})
    for (int k = 1; k <= 50; ++k) {
      const double eta = static_cast<double>(k) / 50.0;
      worst = std::max(worst, std::abs(rate_decentralized(eta, zeta, id).rate - rate_alone(eta, zeta)));
      worst = std::max(worst, std::abs(rate_decentralized(eta, zeta, full).rate - rate_centralized(eta, zeta, 8)));
    }
  o.require(worst <= 1e-12, fmt("collapse error %.3g", worst));
  double worst_eta = 0;
  for (double zeta : {6.0, 22.0, 102.0}) {
    worst_eta = std::max(worst_eta, std::abs(optimal_lr(zeta, spectrum(build_topology("disconnected:1"))).eta - 1.0 / zeta));
    for (std::size_t n : {8u, 32u}) {
      const double expected = static_cast<double>(n) / (static_cast<double>(n) + zeta - 1.0);
      worst_eta = std::max(
          worst_eta, std::abs(optimal_lr(zeta, spectrum(build_topology("fully_connected:" + std::to_string(n)))).eta - expected));
    }
  }
  o.require(worst_eta <= 1e-6, fmt("optimal eta error %.3g", worst_eta));
  if (o.pass) o.detail = fmt("collapse error %.2g, optimal eta error %.2g", worst, worst_eta);
  return o;
}

// 7
Outcome simulation_vs_prediction() {
  Outcome o;
  std::string values;
  for (const char* spec : {"ring:8", "fully_connected:8"}) {
    const GossipMatrix w = build_topology(spec);
    const Spectrum s = spectrum(w);
    const std::size_t dim = 20;
    const OptimalLearningRate opt = optimal_lr(noise_level(dim), s);
    const SimTrace trace = simulate_dsgd({dim, TopologySchedule(w), opt.eta}, 2000, 500, 42);
    const double fitted = fit_empirical_rate(trace);
    const double rel = std::abs(fitted - opt.rate) / opt.rate;
    values += std::string(spec) + fmt(": predicted %.5f fitted %.5f (%.2f%%) ", opt.rate, fitted, 100 * rel);
    o.require(rel <= 0.05, std::string(spec) + fmt(" predicted %.5f fitted %.5f", opt.rate, fitted));
  }
  if (o.pass) o.detail = values;
  return o;
}

// 8
Outcome ring_size_ordering() {
  Outcome o;
  const double zeta = 102.0;
  std::vector<double> etas;
  for (int k = 0; k <= 400; ++k) etas.push_back(1e-3 * std::pow(1000.0, k / 400.0));
  double prev_steps = std::numeric_limits<double>::infinity();
  double prev_eta = 0.0;
  std::string values;
  for (std::size_t n : {2u, 4u, 8u, 16u, 32u}) {
    const Spectrum s = spectrum(build_topology("ring:" + std::to_string(n)));
    const OptimalLearningRate opt = optimal_lr(zeta, s);
    std::vector<double> grid = etas;
    grid.push_back(opt.eta);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : time_to_target(zeta, s, 1e-6, grid)) best = std::min(best, t.steps);
    values += fmt("n=%.0f: eta*=%.4f steps=%.0f ", static_cast<double>(n), opt.eta, best);
    o.require(best <= prev_steps, fmt("time-to-target increased at n=%.0f", static_cast<double>(n)));
    o.require(opt.eta >= prev_eta, fmt("optimal eta decreased at n=%.0f", static_cast<double>(n)));
    prev_steps = best;
    prev_eta = opt.eta;
  }
  o.detail += o.pass ? values : " | " + values;
  return o;
}

// 9
Outcome lyapunov_contraction() {
  Outcome o;
  const GossipMatrix w = build_topology("ring:8");
  const Spectrum s = spectrum(w);
  ConvexParams params;
  params.n = 8;
  params.zeta = noise_level(200);
  RandomizedRunConfig cfg;
  cfg.dim = 200;
  cfg.gamma = select_gamma_corollary(params, s).gamma;
  cfg.eta = lr_bound_main(params, s, cfg.gamma);
  cfg.steps = 2000;
  cfg.reps = 100;
  const LyapunovTrace trace = simulate_randomized_dsgd(w, cfg);
  o.require(!trace.diverged, "diverged");
  const double factor = 1.0 - (1.0 - cfg.p) * cfg.eta * params.mu / 2.0;
  const ContractionCheck check = check_contraction(trace, factor, 100);
  o.require(check.fraction() >= 0.95, fmt("contraction on %.1f%% of steps", 100 * check.fraction()));
  if (o.pass) {
    o.detail = fmt("gamma %.6f eta %.5f, ", cfg.gamma, cfg.eta) +
               fmt("contraction on %.0f/%.0f steps", static_cast<double>(check.satisfied), static_cast<double>(check.checked));
  }
  return o;
}

// 10
Outcome corollary_consistency() {
  Outcome o;
  std::size_t cases = 0, binding = 0;
  for (const char* spec : {"ring:16", "ring:32", "ring:64", "torus:4x8", "star:32", "chain:16", "hypercube:32",
                           "binary_tree:31", "fully_connected:16"}) {
    const Spectrum s = spectrum(build_topology(spec));
    for (double zeta : {64.0, 400.0, 3200.0, 20000.0}) {
      ConvexParams p;
      p.n = s.size();
      p.zeta = zeta;
      const CorollaryChoice c = select_gamma_corollary(p, s);
      ++cases;
      const std::string tag = std::string(spec) + fmt(" zeta %.0f", zeta);
      o.require(c.feasible, tag + " infeasible");
      o.require(c.constraint_lhs <= c.constraint_rhs, tag + " constraint violated");
      if (!c.cap_active) {
        ++binding;
        const double residual = (c.constraint_rhs - c.constraint_lhs) / c.constraint_rhs;
        o.require(residual <= 1e-9, tag + fmt(" residual %.3g", residual));
        if (c.gamma + 1e-3 < 1.0) {
          o.require(corollary_lhs(s, c.gamma + 1e-3) > c.constraint_rhs, tag + " gamma not maximal");
        }
      }
      o.require(c.eta <= lr_bound_main(p, s, c.gamma), tag + " eta above lr_bound_main");
    }
  }
  if (o.pass) o.detail = std::to_string(cases) + " cases, " + std::to_string(binding) + " with the constraint binding";
  return o;
}

// 11
Outcome gamma_round_trip() {
  Outcome o;
  double worst = 0;
  for (const char* spec : {"ring:8", "ring:32", "chain:8", "chain:32", "star:8", "star:32", "torus:4x8",
                           "binary_tree:8", "binary_tree:32", "hypercube:8", "hypercube:32"}) {
    const Spectrum s = spectrum(build_topology(spec));
    for (double g : {0.3, 0.9, 0.99}) {
      const GammaFit fit = fit_gamma(random_walk_covariance(s, g), s);
      worst = std::max(worst, std::abs(fit.gamma - g));
      o.require(std::abs(fit.gamma - g) <= 1e-4, std::string(spec) + fmt(" gamma %.2f fitted %.6f", g, fit.gamma));
    }
  }
  double worst_mc = 0;
  for (const char* spec : {"torus:4x8", "ring:32"}) {
    const GossipMatrix w = build_topology(spec);
    const GammaFit fit = fit_gamma(empirical_covariance(generate_ensemble(TopologySchedule(w), 0.9, 5000, 42)), w);
    worst_mc = std::max(worst_mc, std::abs(fit.gamma - 0.9));
    o.require(std::abs(fit.gamma - 0.9) <= 0.02, std::string(spec) + fmt(" Monte-Carlo fit %.4f", fit.gamma));
  }
  if (o.pass) o.detail = fmt("exact-model max error %.2g, Monte-Carlo max error %.4f", worst, worst_mc);
  return o;
}

// 12
Outcome cli_determinism() {
  Outcome o;
  const std::string svg = (std::filesystem::temp_directory_path() / "topodsgd_accept.svg").string();
  const std::vector<std::vector<std::string>> commands = {
      {"topology", "torus:4x8"},
      {"effneigh", "exp:16", "--method", "monte-carlo", "--gammas", "0.5,0.9", "--reps", "300"},
      {"rate", "ring:8", "--zeta", "20", "--etas", "0.05,0.1", "--optimal"},
      {"simulate", "ring:8", "--d", "10", "--steps", "100", "--reps", "64", "--svg", svg},
      {"simulate", "exp:8", "--d", "10", "--eta", "0.1", "--steps", "50", "--reps", "32"},
      {"randomized", "ring:8", "--d", "20", "--steps", "100", "--reps", "16"},
      {"bounds", "star:16", "--zeta", "200"},
      {"fit-gamma", "--generate", "ring:16", "0.9", "1000"},
      {"report", "--topologies", "ring:8,star:8", "--zeta", "100", "--reps", "500"},
  };
  std::size_t checked = 0;
  for (const auto& cmd : commands) {
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "4", "1"}) {
      std::vector<std::string> args = {"--quiet", "--seed", "7", "--threads", threads};
      args.insert(args.end(), cmd.begin(), cmd.end());
      std::ostringstream out, err;
      const int code = tools::run_cli(args, out, err);
      o.require(code == 0, cmd[0] + " failed: " + err.str());
      std::string text = out.str();
      if (std::find(cmd.begin(), cmd.end(), svg) != cmd.end()) text += read_text_file(svg);
      outputs.push_back(std::move(text));
    }
    ++checked;
    o.require(outputs[0] == outputs[1] && outputs[0] == outputs[2], cmd[0] + " " + cmd[1] + " output differs");
  }
  std::filesystem::remove(svg);
  if (o.pass) o.detail = std::to_string(checked) + " commands identical across runs and thread counts";
  return o;
}

}  // namespace

// Usage: topodsgd_acceptance [--known-failure N]...
// A criterion listed as a known failure still prints FAIL but does not set
// the exit status.
int main(int argc, char** argv) {
  std::vector<int> known;
  for (int k = 1; k < argc; ++k) {
    if (std::string(argv[k]) == "--known-failure" && k + 1 < argc) {
      known.push_back(std::atoi(argv[++k]));
    } else {
      std::fprintf(stderr, "usage: %s [--known-failure N]...\n", argv[0]);
      return 2;
    }
  }
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "spectral-gap reproduction", 1, spectral_gaps},
      {2, "effective-neighbors endpoints", 1, neighbor_endpoints},
      {3, "closed-form vs Monte-Carlo n_W", 60, monte_carlo_neighbors},
      {4, "exponential-schedule exactness", 1, exponential_exactness},
      {5, "fixed point vs transition oracle", 30, fixed_point_vs_oracle},
      {6, "special-case collapse", 5, special_cases},
      {7, "simulation vs prediction", 120, simulation_vs_prediction},
      {8, "ring-size ordering", 10, ring_size_ordering},
      {9, "Lyapunov contraction", 120, lyapunov_contraction},
      {10, "decay-selection consistency", 5, corollary_consistency},
      {11, "gamma-fit round trip", 60, gamma_round_trip},
      {12, "CLI determinism", 60, cli_determinism},
  };
  int failures = 0;
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.limit_seconds) o.require(false, fmt("runtime %.2fs over the %.0fs limit", secs, c.limit_seconds));
    const bool listed = std::find(known.begin(), known.end(), c.id) != known.end();
    if (!o.pass) {
      ++failures;
      if (!listed) ++unexpected;
    }
    std::printf("criterion %2d: %s  %s [%.2fs / %.0fs] %s%s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, o.detail.c_str(), !o.pass && listed ? " (known failure)" : "");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed, %d unexpected failure(s)\n", static_cast<int>(criteria.size()) - failures,
              criteria.size(), unexpected);
  return unexpected == 0 ? 0 : 1;
}
