#include <benchmark/benchmark.h>

#include <string>

#include "topodsgd/covfit.hpp"
#include "topodsgd/effneigh.hpp"
#include "topodsgd/eigen_jacobi.hpp"
#include "topodsgd/quadratic.hpp"
#include "topodsgd/topology.hpp"

using namespace topodsgd;

namespace {

GossipMatrix ring(benchmark::State& state) { return build_topology("ring:" + std::to_string(state.range(0))); }

void BM_JacobiEigen(benchmark::State& state) {
  const Matrix w = ring(state).weights();
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(w));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_JacobiEigen)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_NeighborsClosedForm(benchmark::State& state) {
  const Spectrum s = spectrum(ring(state));
  double g = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(effective_neighbors_closed(s, g));
    g = g < 0.99 ? g + 1e-4 : 0.5;
  }
}
BENCHMARK(BM_NeighborsClosedForm)->Arg(32)->Arg(256);

void BM_RateDecentralized(benchmark::State& state) {
  const Spectrum s = spectrum(ring(state));
  for (auto _ : state) benchmark::DoNotOptimize(rate_decentralized(0.05, 102.0, s));
}
BENCHMARK(BM_RateDecentralized)->Arg(32)->Arg(256);

void BM_OptimalLr(benchmark::State& state) {
  const Spectrum s = spectrum(ring(state));
  for (auto _ : state) benchmark::DoNotOptimize(optimal_lr(102.0, s));
}
BENCHMARK(BM_OptimalLr)->Arg(32);

void BM_TransitionOracle(benchmark::State& state) {
  const GossipMatrix w = ring(state);
  for (auto _ : state) benchmark::DoNotOptimize(transition_rate_oracle(w, 0.05, 102.0));
}
BENCHMARK(BM_TransitionOracle)->Arg(8)->Arg(32);

void BM_FitGamma(benchmark::State& state) {
  const Spectrum s = spectrum(ring(state));
  const Matrix c = random_walk_covariance(s, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gamma(c, s));
}
BENCHMARK(BM_FitGamma)->Arg(16)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
