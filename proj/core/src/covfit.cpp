#include "topodsgd/covfit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "topodsgd/effneigh.hpp"
#include "topodsgd/error.hpp"
#include "topodsgd/parallel.hpp"

namespace topodsgd {

namespace {

constexpr std::size_t kScanPoints = 200;
constexpr double kScanDecades = 6.0;  // gamma = 1 - 10^-t, t in [0, 6]
constexpr double kIdentifiabilityTolerance = 1e-10;

double gamma_at(double t) { return std::min(1.0 - std::pow(10.0, -t), kFitGammaMax); }

struct ScanResult {
  double t = 0.0;
  double value = 0.0;
  bool multimodal = false;
};

// Grid scan over t, then golden-section refinement inside the bracket
// around the best grid point.
ScanResult minimize(const std::function<double(double)>& objective) {
  std::vector<double> values(kScanPoints);
  const double step = kScanDecades / static_cast<double>(kScanPoints - 1);
  for (std::size_t k = 0; k < kScanPoints; ++k) values[k] = objective(step * static_cast<double>(k));
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());

  std::size_t minima = 0;
  for (std::size_t k = 0; k < kScanPoints; ++k) {
    const bool left = k == 0 || values[k] < values[k - 1];
    const bool right = k + 1 == kScanPoints || values[k] <= values[k + 1];
    if (left && right) ++minima;
  }

  double a = step * static_cast<double>(best == 0 ? 0 : best - 1);
  double b = step * static_cast<double>(std::min(best + 1, kScanPoints - 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > 1e-11) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  ScanResult out;
  out.multimodal = minima > 1;
  out.t = fc <= fd ? c : d;
  out.value = std::min(fc, fd);
  const double grid_t = step * static_cast<double>(best);
  if (values[best] < out.value) {
    out.t = grid_t;
    out.value = values[best];
  }
  return out;
}

bool identifiable(const Spectrum& spec) {
  return max_abs_diff(model_covariance(spec, 0.0), model_covariance(spec, kFitGammaMax)) >=
         kIdentifiabilityTolerance;
}

}  // namespace

void WorkerEnsemble::validate() const {
  if (samples.rows() < 2) throw InvalidArgument("ensemble needs at least 2 repetitions");
  if (samples.cols() == 0) throw InvalidArgument("ensemble has no workers");
  for (double v : samples.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("ensemble contains a non-finite entry");
  }
}

WorkerEnsemble generate_ensemble(const TopologySchedule& schedule, double gamma, std::size_t reps,
                                 std::uint64_t seed, std::size_t steps) {
  WorkerEnsemble e;
  e.samples = sample_random_walk(schedule, gamma, steps, reps, seed);
  e.source = "random-walk " + schedule.label() + " gamma=" + std::to_string(gamma) +
             " reps=" + std::to_string(reps) + " seed=" + std::to_string(seed);
  return e;
}

Matrix empirical_covariance(const WorkerEnsemble& ensemble) {
  ensemble.validate();
  const std::size_t r = ensemble.reps();
  const std::size_t n = ensemble.workers();
  Matrix centred = ensemble.samples;
  std::vector<double> col(r);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < r; ++k) col[k] = centred(k, j);
    const double mean = pairwise_sum(col) / static_cast<double>(r);
    for (std::size_t k = 0; k < r; ++k) centred(k, j) -= mean;
  }
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      for (std::size_t k = 0; k < r; ++k) col[k] = centred(k, i) * centred(k, j);
      c(i, j) = c(j, i) = pairwise_sum(col) / static_cast<double>(r - 1);
    }
  }
  return c;
}

Matrix normalize_covariance(const Matrix& c) {
  if (!c.square()) throw InvalidArgument("covariance must be square");
  const std::size_t n = c.rows();
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c(i, i) > 0.0)) {
      throw InvalidArgument("covariance diagonal entry " + std::to_string(i) + " is not positive");
    }
    scale[i] = 1.0 / std::sqrt(c(i, i));
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = i == j ? 1.0 : c(i, j) * scale[i] * scale[j];
  return out;
}

double covariance_mse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("covariance shapes differ");
  if (a.empty()) throw InvalidArgument("empty covariance");
  std::vector<double> sq(a.data().size());
  for (std::size_t k = 0; k < sq.size(); ++k) {
    const double d = a.data()[k] - b.data()[k];
    sq[k] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(sq.size());
}

Matrix model_covariance(const Spectrum& spec, double gamma) {
  return normalize_covariance(random_walk_covariance(spec, gamma));
}

GammaFit fit_gamma(const Matrix& c_emp, const Spectrum& spec) {
  if (!c_emp.square() || c_emp.rows() != spec.size()) {
    throw InvalidArgument("covariance is " + std::to_string(c_emp.rows()) + "x" + std::to_string(c_emp.cols()) +
                          " but the topology has " + std::to_string(spec.size()) + " workers");
  }
  const Matrix target = normalize_covariance(c_emp);
  GammaFit fit;
  fit.identifiable = identifiable(spec);
  if (!fit.identifiable) {
    fit.gamma = 0.0;
    fit.mse = covariance_mse(target, model_covariance(spec, 0.0));
  } else {
    const ScanResult best =
        minimize([&](double t) { return covariance_mse(target, model_covariance(spec, gamma_at(t))); });
    fit.gamma = gamma_at(best.t);
    fit.mse = best.value;
    fit.used_fallback = best.multimodal;
  }
  fit.n_eff = effective_neighbors_closed(spec, fit.gamma).value;
  return fit;
}

GammaFit fit_gamma(const Matrix& c_emp, const GossipMatrix& w) { return fit_gamma(c_emp, spectrum(w)); }

FitReport fit_report(const std::vector<FitInput>& inputs) {
  if (inputs.empty()) throw InvalidArgument("fit report needs at least one topology");
  FitReport report;
  report.rows.resize(inputs.size());
  std::vector<Matrix> targets(inputs.size());
  std::vector<char> usable(inputs.size(), 0);

  parallel_for(inputs.size(), [&](std::size_t k) {
    const FitInput& in = inputs[k];
    FitReportRow& row = report.rows[k];
    row.topology = in.topology;
    row.fit = fit_gamma(in.covariance, in.spec);
    row.spectral_gap = in.spec.size() < 2 ? 0.0 : spectral_gap(in.spec);
    targets[k] = normalize_covariance(in.covariance);
    usable[k] = row.fit.identifiable ? 1 : 0;
  });

  const bool any = std::any_of(usable.begin(), usable.end(), [](char u) { return u != 0; });
  if (any) {
    auto summed = [&](double t) {
      const double g = gamma_at(t);
      std::vector<double> terms;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (usable[k]) terms.push_back(covariance_mse(targets[k], model_covariance(inputs[k].spec, g)));
      }
      return pairwise_sum(terms);
    };
    const ScanResult best = minimize(summed);
    report.shared_gamma = gamma_at(best.t);
    report.shared_mse = best.value;
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    report.rows[k].shared_gamma = report.shared_gamma;
    report.rows[k].n_eff_at_shared_gamma = effective_neighbors_closed(inputs[k].spec, report.shared_gamma).value;
  }
  return report;
}

}  // namespace topodsgd
