#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topodsgd/covfit.hpp"
#include "topodsgd/effneigh.hpp"
#include "topodsgd/matrix.hpp"
#include "topodsgd/quadratic.hpp"
#include "topodsgd/theory.hpp"

namespace topodsgd {

// 17 significant digits, which round-trips every finite double.
std::string format_double(double v);

// Row-major, no header.
std::string matrix_to_csv(const Matrix& m);
// Throws InvalidArgument with "line L, field F" diagnostics on malformed input.
Matrix matrix_from_csv(std::string_view text);

// Header w0,w1,...; one row per repetition.
std::string ensemble_to_csv(const WorkerEnsemble& e);
WorkerEnsemble ensemble_from_csv(std::string_view text, std::string source = {});

std::string trace_to_csv(const SimTrace& trace);  // step,value

struct RateRow {
  double eta = 0.0;
  RateSolution solution;
};
std::string rate_sweep_to_csv(const std::vector<RateRow>& rows);  // eta,rate,gamma_star,n_eff,diverged

struct NeighborRow {
  std::string topology;
  EffectiveNeighbors value;
};
std::string neighbors_to_csv(const std::vector<NeighborRow>& rows);  // topology,gamma,n_eff,method,stderr

std::string lyapunov_to_csv(const LyapunovTrace& trace);  // step,mean,stderr,distance_term,consensus_term

struct BoundRow {
  std::string topology;
  double gamma = 0.0;
  double n_eff = 1.0;
  double beta = 0.0;
  double lr_main = 0.0;
  double lr_general = 0.0;
  double lr_corollary = 0.0;
};
std::string bounds_to_csv(const std::vector<BoundRow>& rows);

// topology,gamma_hat,mse,n_eff_at_fit,n_eff_at_shared_gamma,spectral_gap,shared_gamma
std::string fit_report_to_csv(const FitReport& report);

// Whole-file I/O; failures throw IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace topodsgd
