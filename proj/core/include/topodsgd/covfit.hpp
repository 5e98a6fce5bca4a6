#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "topodsgd/matrix.hpp"
#include "topodsgd/topology.hpp"

namespace topodsgd {

/// R x n scalar worker statistics, one row per repetition.
struct WorkerEnsemble {
  Matrix samples;
  std::string source;  // free-form description of the generating run

  std::size_t reps() const { return samples.rows(); }
  std::size_t workers() const { return samples.cols(); }
  // Throws InvalidArgument unless R >= 2, n >= 1 and all entries are finite.
  void validate() const;
};

/// Final states of the averaged random walk at decay gamma (worker statistic:
/// the walk's scalar state per worker).
WorkerEnsemble generate_ensemble(const TopologySchedule& schedule, double gamma, std::size_t reps,
                                 std::uint64_t seed, std::size_t steps = 0);

/// Sample covariance across repetitions, mean-centred per worker, R - 1 denominator.
Matrix empirical_covariance(const WorkerEnsemble& ensemble);

/// D^{-1/2} C D^{-1/2} with D = diag(C); the diagonal is set to exactly 1.
Matrix normalize_covariance(const Matrix& c);

/// Mean of squared entrywise differences over all n^2 entries.
double covariance_mse(const Matrix& a, const Matrix& b);

/// Normalized random-walk covariance of W at decay gamma.
Matrix model_covariance(const Spectrum& spec, double gamma);

// Decay range searched by the fits.
inline constexpr double kFitGammaMax = 1.0 - 1e-6;

struct GammaFit {
  double gamma = 0.0;
  double mse = 0.0;
  double n_eff = 1.0;
  // False when the model covariance does not move with gamma (fully
  // connected or disconnected W); gamma is then the first scan point.
  bool identifiable = true;
  // The residual had more than one local minimum on the scan grid; the
  // refinement ran around the best grid point only.
  bool used_fallback = false;
};

/// Fits gamma in [0, 1 - 1e-6] by minimizing covariance_mse between the
/// normalized empirical covariance and the normalized model. A 200-point scan
/// (uniform in -log10(1 - gamma)) brackets the best point, then golden-section
/// search refines to |d gamma| <= 1e-5 or better.
GammaFit fit_gamma(const Matrix& c_emp, const Spectrum& spec);
GammaFit fit_gamma(const Matrix& c_emp, const GossipMatrix& w);

struct FitInput {
  std::string topology;
  Spectrum spec;
  Matrix covariance;  // empirical, normalized or not
};

struct FitReportRow {
  std::string topology;
  GammaFit fit;
  double n_eff_at_shared_gamma = 1.0;
  double spectral_gap = 0.0;
  double shared_gamma = 0.0;
};

struct FitReport {
  std::vector<FitReportRow> rows;
  double shared_gamma = 0.0;
  double shared_mse = 0.0;  // summed over identifiable entries
};

/// Per-topology fits plus one shared gamma minimizing the summed MSE over
/// the identifiable entries. Fits run in parallel; results are in input order.
FitReport fit_report(const std::vector<FitInput>& inputs);

}  // namespace topodsgd
