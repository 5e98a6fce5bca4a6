#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "svg.hpp"
#include "topodsgd/covfit.hpp"
#include "topodsgd/csv.hpp"
#include "topodsgd/effneigh.hpp"
#include "topodsgd/error.hpp"
#include "topodsgd/parallel.hpp"
#include "topodsgd/quadratic.hpp"
#include "topodsgd/theory.hpp"
#include "topodsgd/topology.hpp"

namespace topodsgd::tools {

namespace {

using json = nlohmann::ordered_json;

struct Globals {
  std::string out_path;
  std::string format;  // empty: command default
  std::uint64_t seed = 42;
  bool quiet = false;
  unsigned threads = 0;
};

class Session {
 public:
  Session(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  bool json_output(const char* fallback = "csv") const { return (g_.format.empty() ? fallback : g_.format) == "json"; }
  std::uint64_t seed() const { return g_.seed; }

  void emit(const std::string& text) const {
    if (g_.out_path.empty()) {
      out_ << text;
    } else {
      write_text_file(g_.out_path, text);
    }
  }
  void emit(const json& doc) const { emit(doc.dump(2) + "\n"); }

  void note(const std::string& line) const {
    if (!g_.quiet) err_ << line << '\n';
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
};

json header(const char* command) {
  json j;
  j["schema_version"] = 1;
  j["command"] = command;
  return j;
}

// Static gossip matrix from a spec; time-varying schedules are rejected.
GossipMatrix static_topology(const std::string& spec) {
  TopologySchedule schedule = build_schedule(spec);
  if (!schedule.is_static()) {
    throw InvalidArgument("'" + spec + "' is time-varying; this command needs a static topology");
  }
  return schedule.fixed();
}

std::string fmt(double v) { return format_double(v); }

// ---- topology ----

struct TopologyArgs {
  std::string spec;
};

void cmd_topology(const Session& s, const TopologyArgs& a) {
  const GossipMatrix w = static_topology(a.spec);
  const ValidationReport report = validate(w.weights(), &w.edges());
  if (s.json_output()) {
    json j = header("topology");
    j["topology"] = w.label();
    j["n"] = w.size();
    json rows = json::array();
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto r = w.weights().row(i);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["weights"] = rows;
    j["valid"] = report.valid();
    j["validation"] = report.to_string();
    if (w.size() >= 2) j["spectral_gap"] = spectral_gap(w);
    s.emit(j);
  } else {
    s.emit(matrix_to_csv(w.weights()));
  }
  s.note(report.to_string());
  if (!report.valid()) throw InvalidArgument("gossip matrix failed validation");
}

// ---- effneigh ----

struct EffneighArgs {
  std::string spec;
  std::vector<double> gammas{0.0, 0.5, 0.9, 0.99};
  std::string method = "closed-form";
  std::size_t reps = 2000;
  std::size_t steps = 0;
};

void cmd_effneigh(const Session& s, const EffneighArgs& a) {
  const TopologySchedule schedule = build_schedule(a.spec);
  std::vector<NeighborRow> rows;
  for (double g : a.gammas) {
    NeighborRow row{schedule.label(), {}};
    if (a.method == "monte-carlo") {
      row.value = effective_neighbors_montecarlo(schedule, g, a.steps, a.reps, s.seed());
    } else {
      if (!schedule.is_static()) throw InvalidArgument("closed form needs a static topology; use --method monte-carlo");
      row.value = g >= 1.0 ? effective_neighbors_limit(spectrum(schedule.fixed()))
                           : effective_neighbors_closed(spectrum(schedule.fixed()), g);
    }
    rows.push_back(std::move(row));
  }
  if (s.json_output()) {
    json j = header("effneigh");
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"topology", r.topology},
                     {"gamma", r.value.gamma},
                     {"n_eff", r.value.value},
                     {"method", to_string(r.value.method)},
                     {"stderr", r.value.standard_error},
                     {"limit_approximation", r.value.limit_approximation}});
    }
    j["rows"] = arr;
    s.emit(j);
  } else {
    s.emit(neighbors_to_csv(rows));
  }
}

// ---- rate ----

struct RateArgs {
  std::string spec;
  double zeta = 0.0;
  std::vector<double> etas;
  bool optimal = false;
};

void cmd_rate(const Session& s, const RateArgs& a) {
  const GossipMatrix w = static_topology(a.spec);
  const Spectrum spec = spectrum(w);
  std::vector<RateRow> rows;
  if (a.optimal) {
    const OptimalLearningRate opt = optimal_lr(a.zeta, spec);
    rows.push_back({opt.eta, rate_decentralized(opt.eta, a.zeta, spec)});
    s.note("optimal eta " + fmt(opt.eta) + ", rate " + fmt(opt.rate));
  }
  for (double eta : a.etas) rows.push_back({eta, rate_decentralized(eta, a.zeta, spec)});
  if (rows.empty()) throw InvalidArgument("give --etas or --optimal");

  if (s.json_output()) {
    json j = header("rate");
    j["topology"] = w.label();
    j["zeta"] = a.zeta;
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"eta", r.eta},
                     {"rate", r.solution.rate},
                     {"gamma_star", r.solution.gamma_star},
                     {"n_eff", r.solution.n_eff},
                     {"diverged", r.solution.diverged}});
    }
    j["rows"] = arr;
    s.emit(j);
  } else {
    s.emit(rate_sweep_to_csv(rows));
  }
}

// ---- simulate ----

struct SimulateArgs {
  std::string spec;
  std::size_t dim = 20;
  std::optional<double> eta;
  std::size_t steps = 200;
  std::size_t reps = 100;
  std::string svg;
  bool log_y = true;
};

void cmd_simulate(const Session& s, const SimulateArgs& a) {
  TopologySchedule schedule = build_schedule(a.spec);
  double eta = 0.0;
  std::optional<double> predicted;
  if (a.eta) {
    eta = *a.eta;
  } else {
    if (!schedule.is_static()) throw InvalidArgument("--eta is required for time-varying topologies");
    const OptimalLearningRate opt = optimal_lr(noise_level(a.dim), spectrum(schedule.fixed()));
    eta = opt.eta;
    s.note("using optimal eta " + fmt(eta));
  }
  if (schedule.is_static() && eta > 0.0) predicted = rate_decentralized(eta, noise_level(a.dim), spectrum(schedule.fixed())).rate;

  const std::string label = schedule.label();
  ToyProblem problem{a.dim, std::move(schedule), eta};
  const SimTrace trace = simulate_dsgd(problem, a.steps, a.reps, s.seed());

  std::optional<double> fitted;
  if (a.steps >= 5) {
    try {
      fitted = fit_empirical_rate(trace);
    } catch (const InvalidArgument&) {
      // trace reached zero or overflowed; leave the fit out
    }
  }
  if (fitted) s.note("fitted rate " + fmt(*fitted) + (predicted ? ", predicted " + fmt(*predicted) : ""));

  if (s.json_output()) {
    json j = header("simulate");
    j["topology"] = trace.topology;
    j["dim"] = a.dim;
    j["eta"] = eta;
    j["seed"] = trace.seed;
    j["reps"] = trace.reps;
    j["predicted_rate"] = predicted ? json(*predicted) : json(nullptr);
    j["fitted_rate"] = fitted ? json(*fitted) : json(nullptr);
    j["values"] = trace.values;
    s.emit(j);
  } else {
    s.emit(trace_to_csv(trace));
  }
  if (!a.svg.empty()) {
    Series series{label, {}, trace.values};
    for (std::size_t t = 0; t < trace.values.size(); ++t) series.x.push_back(static_cast<double>(t));
    write_text_file(a.svg, render_svg({series}, {"D-SGD on the isotropic quadratic", "step", "mean error", a.log_y}));
  }
}

// ---- randomized ----

struct RandomizedArgs {
  std::string spec;
  std::size_t dim = 200;
  std::optional<double> gamma;
  std::optional<double> eta;
  double eta_scale = 1.0;
  double p = 0.5;
  std::optional<double> omega;
  std::size_t steps = 1000;
  std::size_t reps = 100;
  std::size_t burn_in = 100;
  std::string variant = "randomized";
  std::string svg;
};

void cmd_randomized(const Session& s, const RandomizedArgs& a) {
  const GossipMatrix w = static_topology(a.spec);
  const Spectrum spec = spectrum(w);
  ConvexParams params;
  params.zeta = noise_level(a.dim);
  params.n = w.size();
  params.p = a.p;
  params.validate();

  RandomizedRunConfig cfg;
  cfg.dim = a.dim;
  cfg.p = a.p;
  cfg.omega = a.omega;
  cfg.steps = a.steps;
  cfg.reps = a.reps;
  cfg.seed = s.seed();
  cfg.variant = a.variant == "deterministic" ? DsgdVariant::Deterministic : DsgdVariant::Randomized;
  cfg.gamma = a.gamma ? *a.gamma : select_gamma_corollary(params, spec).gamma;
  const double bound = lr_bound_main(params, spec, cfg.gamma);
  cfg.eta = (a.eta ? *a.eta : bound) * a.eta_scale;

  const LyapunovTrace trace = simulate_randomized_dsgd(w, cfg);
  const double factor = 1.0 - (1.0 - cfg.p) * cfg.eta * params.mu / 2.0;
  const ContractionCheck check = check_contraction(trace, factor, std::min(a.burn_in, trace.mean.size()));
  s.note("gamma " + fmt(cfg.gamma) + ", eta " + fmt(cfg.eta) + " (lr_bound_main " + fmt(bound) + ")");
  if (trace.diverged) {
    s.note("diverged at step " + std::to_string(trace.diverged_at));
  } else {
    s.note("contraction held on " + std::to_string(check.satisfied) + "/" + std::to_string(check.checked) + " steps");
  }

  if (s.json_output()) {
    json j = header("randomized");
    j["topology"] = w.label();
    j["gamma"] = cfg.gamma;
    j["eta"] = cfg.eta;
    j["lr_bound_main"] = bound;
    j["p"] = cfg.p;
    j["omega"] = trace.omega;
    j["variant"] = a.variant;
    j["diverged"] = trace.diverged;
    j["diverged_at"] = trace.diverged ? json(trace.diverged_at) : json(nullptr);
    j["contraction_factor"] = factor;
    j["contraction_fraction"] = check.fraction();
    j["mean"] = trace.mean;
    j["stderr"] = trace.standard_error;
    s.emit(j);
  } else {
    s.emit(lyapunov_to_csv(trace));
  }
  if (!a.svg.empty()) {
    Series series{w.label(), {}, trace.mean};
    for (std::size_t t = 0; t < trace.mean.size(); ++t) series.x.push_back(static_cast<double>(t));
    write_text_file(a.svg, render_svg({series}, {"Randomized D-SGD Lyapunov function", "step", "L_t", true}));
  }
}

// ---- bounds ----

struct BoundsArgs {
  std::string spec;
  double zeta = 0.0;
  double L = 1.0;
  double p = 0.5;
  std::vector<double> gammas{0.0, 0.5, 0.9, 0.99};
};

void cmd_bounds(const Session& s, const BoundsArgs& a) {
  const GossipMatrix w = static_topology(a.spec);
  const Spectrum spec = spectrum(w);
  ConvexParams params;
  params.mu = std::min(1.0, a.L);
  params.L = a.L;
  params.zeta = a.zeta;
  params.n = w.size();
  params.p = a.p;
  params.validate();

  std::vector<BoundRow> rows;
  for (double g : a.gammas) {
    require_decay(g);
    BoundRow r;
    r.topology = w.label();
    r.gamma = g;
    r.n_eff = bound_neighbors(spec, g).used();
    const GeneralBound general = lr_bound_general(params, w, g);
    r.beta = general.beta;
    r.lr_main = lr_bound_main(params, spec, g);
    r.lr_general = general.value;
    r.lr_corollary = r.n_eff / (16.0 * a.zeta);
    rows.push_back(r);
  }
  std::optional<CorollaryChoice> choice;
  try {
    choice = select_gamma_corollary(params, spec);
  } catch (const InvalidArgument& e) {
    s.note(std::string("no decay selection: ") + e.what());
  }
  if (choice) s.note("selected gamma " + fmt(choice->gamma) + ", eta " + fmt(choice->eta));

  if (s.json_output()) {
    json j = header("bounds");
    j["topology"] = w.label();
    j["zeta"] = a.zeta;
    j["L"] = a.L;
    j["p"] = a.p;
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"gamma", r.gamma},
                     {"n_eff", r.n_eff},
                     {"beta", r.beta},
                     {"lr_main", r.lr_main},
                     {"lr_general", r.lr_general},
                     {"lr_corollary", r.lr_corollary}});
    }
    j["rows"] = arr;
    if (choice) {
      j["selection"] = {{"gamma", choice->gamma},           {"n_eff", choice->n_eff},
                        {"eta", choice->eta},               {"cap_active", choice->cap_active},
                        {"feasible", choice->feasible},     {"constraint_lhs", choice->constraint_lhs},
                        {"constraint_rhs", choice->constraint_rhs}};
    } else {
      j["selection"] = nullptr;
    }
    s.emit(j);
  } else {
    s.emit(bounds_to_csv(rows));
  }
}

// ---- fit-gamma ----

struct FitArgs {
  std::string ensemble;
  std::vector<std::string> generate;  // spec gamma reps
  std::string topology;
  std::string save_ensemble;
};

json fit_json(const GammaFit& f) {
  return {{"gamma_hat", f.gamma},
          {"mse", f.mse},
          {"n_eff", f.n_eff},
          {"identifiable", f.identifiable},
          {"used_fallback", f.used_fallback}};
}

double parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument(std::string(what) + ": not a number: '" + text + "'");
}

void cmd_fit_gamma(const Session& s, const FitArgs& a) {
  WorkerEnsemble ensemble;
  std::string topology = a.topology;
  if (!a.generate.empty()) {
    const std::string& spec = a.generate[0];
    const double gamma = parse_number(a.generate[1], "--generate gamma");
    const double reps = parse_number(a.generate[2], "--generate reps");
    if (!(reps >= 2 && reps == std::floor(reps))) throw InvalidArgument("--generate reps must be an integer >= 2");
    ensemble = generate_ensemble(build_schedule(spec), gamma, static_cast<std::size_t>(reps), s.seed());
    if (topology.empty()) topology = spec;
    if (!a.save_ensemble.empty()) write_text_file(a.save_ensemble, ensemble_to_csv(ensemble));
  } else {
    if (topology.empty()) throw InvalidArgument("--topology is required with --ensemble");
    try {
      ensemble = ensemble_from_csv(read_text_file(a.ensemble), a.ensemble);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(a.ensemble + ": " + e.what());
    }
  }
  const GossipMatrix w = static_topology(topology);
  const GammaFit fit = fit_gamma(empirical_covariance(ensemble), w);
  if (!fit.identifiable) s.note("gamma is not identifiable on " + w.label());

  if (s.json_output("json")) {
    json j = header("fit-gamma");
    j["topology"] = w.label();
    j["reps"] = ensemble.reps();
    j["source"] = ensemble.source;
    j["fit"] = fit_json(fit);
    s.emit(j);
  } else {
    std::string csv = "topology,gamma_hat,mse,n_eff,identifiable\n";
    csv += w.label() + "," + fmt(fit.gamma) + "," + fmt(fit.mse) + "," + fmt(fit.n_eff) + "," +
           (fit.identifiable ? "1" : "0") + "\n";
    s.emit(csv);
  }
}

// ---- report ----

struct ReportArgs {
  std::vector<std::string> topologies;
  double zeta = 3200.0;
  std::vector<std::string> ensembles;
  double generate_gamma = 0.9;
  std::size_t reps = 2000;
};

void cmd_report(const Session& s, const ReportArgs& a) {
  if (a.topologies.empty()) throw InvalidArgument("--topologies is empty");
  if (!a.ensembles.empty() && a.ensembles.size() != a.topologies.size()) {
    throw InvalidArgument("--ensembles must list one file per topology");
  }
  std::vector<FitInput> inputs;
  std::vector<GossipMatrix> matrices;
  for (std::size_t k = 0; k < a.topologies.size(); ++k) {
    GossipMatrix w = static_topology(a.topologies[k]);
    WorkerEnsemble e = a.ensembles.empty()
                           ? generate_ensemble(TopologySchedule(w), a.generate_gamma, a.reps, stream_seed(s.seed(), k))
                           : ensemble_from_csv(read_text_file(a.ensembles[k]), a.ensembles[k]);
    inputs.push_back({w.label(), spectrum(w), empirical_covariance(e)});
    matrices.push_back(std::move(w));
  }
  FitReport report = fit_report(inputs);

  struct Entry {
    FitReportRow row;
    OptimalLearningRate opt;
  };
  std::vector<Entry> entries;
  for (std::size_t k = 0; k < inputs.size(); ++k) entries.push_back({report.rows[k], optimal_lr(a.zeta, inputs[k].spec)});
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.opt.rate > y.opt.rate; });

  if (s.json_output()) {
    json j = header("report");
    j["zeta"] = a.zeta;
    j["shared_gamma"] = report.shared_gamma;
    json arr = json::array();
    for (const auto& e : entries) {
      json r = {{"topology", e.row.topology}, {"spectral_gap", e.row.spectral_gap},
                {"n_eff_at_shared_gamma", e.row.n_eff_at_shared_gamma}, {"optimal_eta", e.opt.eta},
                {"predicted_rate", e.opt.rate}};
      r["fit"] = fit_json(e.row.fit);
      arr.push_back(r);
    }
    j["rows"] = arr;
    s.emit(j);
  } else {
    std::string csv =
        "topology,gamma_hat,mse,n_eff_at_fit,n_eff_at_shared_gamma,spectral_gap,shared_gamma,optimal_eta,predicted_rate\n";
    for (const auto& e : entries) {
      const auto& r = e.row;
      csv += r.topology + "," + fmt(r.fit.gamma) + "," + fmt(r.fit.mse) + "," + fmt(r.fit.n_eff) + "," +
             fmt(r.n_eff_at_shared_gamma) + "," + fmt(r.spectral_gap) + "," + fmt(r.shared_gamma) + "," +
             fmt(e.opt.eta) + "," + fmt(e.opt.rate) + "\n";
    }
    s.emit(csv);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology-aware analysis of decentralized SGD on gossip graphs", "topodsgd"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--out", g.out_path, "Write the result here instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress diagnostics on stderr");
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)");

  TopologyArgs topo;
  auto* c_topo = app.add_subcommand("topology", "Build a gossip matrix and validate it");
  c_topo->add_option("spec", topo.spec, "Topology spec, e.g. ring:32 or torus:4x8")->required();

  EffneighArgs eff;
  auto* c_eff = app.add_subcommand("effneigh", "Effective number of neighbors over a decay grid");
  c_eff->add_option("spec", eff.spec)->required();
  c_eff->add_option("--gammas", eff.gammas)->delimiter(',');
  c_eff->add_option("--method", eff.method)->check(CLI::IsMember({"closed-form", "monte-carlo"}));
  c_eff->add_option("--reps", eff.reps)->check(CLI::PositiveNumber);
  c_eff->add_option("--steps", eff.steps, "Walk length (0: burn-in rule)");

  RateArgs rate;
  auto* c_rate = app.add_subcommand("rate", "Exact convergence rate on the isotropic quadratic");
  c_rate->add_option("spec", rate.spec)->required();
  c_rate->add_option("--zeta", rate.zeta, "Noise level")->required();
  c_rate->add_option("--etas", rate.etas)->delimiter(',');
  c_rate->add_flag("--optimal", rate.optimal, "Add the rate-maximizing learning rate");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo D-SGD on the isotropic quadratic");
  c_sim->add_option("spec", sim.spec)->required();
  c_sim->add_option("--d", sim.dim, "Dimension")->check(CLI::PositiveNumber);
  c_sim->add_option("--eta", sim.eta, "Learning rate (default: optimal)");
  c_sim->add_option("--steps", sim.steps);
  c_sim->add_option("--reps", sim.reps)->check(CLI::PositiveNumber);
  c_sim->add_option("--svg", sim.svg, "Also write a plot");
  c_sim->add_flag("!--linear", sim.log_y, "Linear y axis in the plot");

  RandomizedArgs rnd;
  auto* c_rnd = app.add_subcommand("randomized", "Randomized D-SGD with Lyapunov tracking");
  c_rnd->add_option("spec", rnd.spec)->required();
  c_rnd->add_option("--d", rnd.dim)->check(CLI::PositiveNumber);
  c_rnd->add_option("--gamma", rnd.gamma, "Decay (default: selected from the closeness constraint)");
  c_rnd->add_option("--eta", rnd.eta, "Learning rate (default: lr_bound_main)");
  c_rnd->add_option("--eta-scale", rnd.eta_scale, "Multiplier on the learning rate");
  c_rnd->add_option("--p", rnd.p, "Communication probability");
  c_rnd->add_option("--omega", rnd.omega, "Lyapunov weight (default 1/n_W)");
  c_rnd->add_option("--steps", rnd.steps)->check(CLI::PositiveNumber);
  c_rnd->add_option("--reps", rnd.reps)->check(CLI::PositiveNumber);
  c_rnd->add_option("--burn-in", rnd.burn_in);
  c_rnd->add_option("--variant", rnd.variant)->check(CLI::IsMember({"randomized", "deterministic"}));
  c_rnd->add_option("--svg", rnd.svg);

  BoundsArgs bnd;
  auto* c_bnd = app.add_subcommand("bounds", "Learning-rate bounds over a decay grid");
  c_bnd->add_option("spec", bnd.spec)->required();
  c_bnd->add_option("--zeta", bnd.zeta)->required();
  c_bnd->add_option("--L", bnd.L);
  c_bnd->add_option("--p", bnd.p);
  c_bnd->add_option("--gammas", bnd.gammas)->delimiter(',');

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-gamma", "Fit the decay to an inter-worker covariance");
  auto* o_ens = c_fit->add_option("--ensemble", fit.ensemble, "Ensemble CSV (header w0,w1,...)");
  auto* o_gen = c_fit->add_option("--generate", fit.generate, "SPEC GAMMA REPS: sample the random walk")->expected(3);
  o_ens->excludes(o_gen);
  c_fit->add_option("--topology", fit.topology, "Topology the model covariance is built on");
  c_fit->add_option("--save-ensemble", fit.save_ensemble, "Write the generated ensemble CSV");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Per-topology fit, spectral gap and optimal rate");
  c_rep->add_option("--topologies", rep.topologies)->delimiter(',')->required();
  c_rep->add_option("--zeta", rep.zeta);
  c_rep->add_option("--ensembles", rep.ensembles)->delimiter(',');
  c_rep->add_option("--generate-gamma", rep.generate_gamma);
  c_rep->add_option("--reps", rep.reps);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (c_fit->parsed() && fit.ensemble.empty() && fit.generate.empty()) {
    err << "error: fit-gamma needs --ensemble or --generate\n";
    return kExitUsage;
  }

  const unsigned previous_threads = thread_count();
  set_thread_count(g.threads);
  Session session(g, out, err);
  int code = kExitOk;
  try {
    if (c_topo->parsed()) cmd_topology(session, topo);
    if (c_eff->parsed()) cmd_effneigh(session, eff);
    if (c_rate->parsed()) cmd_rate(session, rate);
    if (c_sim->parsed()) cmd_simulate(session, sim);
    if (c_rnd->parsed()) cmd_randomized(session, rnd);
    if (c_bnd->parsed()) cmd_bounds(session, bnd);
    if (c_fit->parsed()) cmd_fit_gamma(session, fit);
    if (c_rep->parsed()) cmd_report(session, rep);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    code = kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    code = kExitNumerical;
  }
  set_thread_count(previous_threads);
  return code;
}

}  // namespace topodsgd::tools
