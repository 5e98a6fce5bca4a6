#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "topodsgd/effneigh.hpp"
#include "topodsgd/error.hpp"
#include "topodsgd/parallel.hpp"

using namespace topodsgd;

TEST(ClosedForm, Endpoints) {
  for (double g : {0.0, 0.5, 0.99}) {
    EXPECT_NEAR(effective_neighbors_closed(spectrum(build_topology("fully_connected:16")), g).value, 16.0, 1e-9);
    EXPECT_NEAR(effective_neighbors_closed(spectrum(build_topology("disconnected:16")), g).value, 1.0, 1e-9);
  }
  EXPECT_NEAR(effective_neighbors_closed(spectrum(build_topology("ring:32")), 0.0).value, 3.0, 1e-9);
  EXPECT_GE(effective_neighbors_limit(spectrum(build_topology("ring:32"))).value, 31.5);
  EXPECT_TRUE(effective_neighbors_limit(spectrum(build_topology("ring:32"))).limit_approximation);
}

TEST(ClosedForm, RejectsBadDecay) {
  const Spectrum s = spectrum(build_topology("ring:4"));
  EXPECT_THROW(effective_neighbors_closed(s, 1.0), InvalidArgument);
  EXPECT_THROW(effective_neighbors_closed(s, -0.1), InvalidArgument);
}

TEST(ClosedForm, MatchesPowerSeriesOracle) {
  for (const char* spec : {"ring:8", "star:8", "torus:3x4", "chain:6", "binary_tree:9", "hypercube:8"}) {
    const GossipMatrix w = build_topology(spec);
    const Spectrum s = spectrum(w);
    for (double g : {0.0, 0.3, 0.9, 0.99}) {
      EXPECT_NEAR(effective_neighbors_closed(s, g).value, oracle::neighbors_series(w.weights(), g), 1e-9)
          << spec << " gamma=" << g;
    }
  }
}

TEST(ClosedForm, MonotoneAndBounded) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    const Spectrum s = spectrum(metropolis_hastings(n, oracle::random_connected_edges(n, 0.2, rng), "r"));
    double previous = 0.0;
    for (int k = 0; k <= 40; ++k) {
      const double g = 1.0 - std::pow(10.0, -k / 8.0);
      const double v = effective_neighbors_closed(s, std::min(g, kGammaLimit)).value;
      EXPECT_GE(v, 1.0 - 1e-12);
      EXPECT_LE(v, static_cast<double>(n) + 1e-9);
      EXPECT_GE(v, previous - 1e-9);
      previous = v;
    }
  }
}

TEST(ClosedForm, PerWorkerVarianceAveragesToDenominator) {
  const Spectrum s = spectrum(build_topology("star:8"));
  const auto e = effective_neighbors_closed(s, 0.7);
  double mean = 0.0;
  for (double v : e.per_worker_variance) mean += v / 8.0;
  EXPECT_NEAR(e.value, (1.0 / 0.3) / mean, 1e-12);
  EXPECT_FALSE(has_uniform_variance(s, 0.7));
  EXPECT_TRUE(has_uniform_variance(spectrum(build_topology("ring:8")), 0.7));
  for (const char* spec : {"ring:256", "torus:16x16", "hypercube:256"})
    EXPECT_TRUE(has_uniform_variance(spectrum(build_topology(spec)), 0.97)) << spec;
}

TEST(Transition, EqualsClosedFormOnRegularGraphs) {
  for (const char* spec : {"ring:8", "torus:3x3", "hypercube:8", "fully_connected:5"}) {
    const Spectrum s = spectrum(build_topology(spec));
    for (double g : {0.0, 0.5, 0.95})
      EXPECT_NEAR(effective_neighbors_transition(s, g), effective_neighbors_closed(s, g).value, 1e-12);
  }
}

TEST(Transition, BetweenOneAndN) {
  for (const char* spec : {"star:8", "chain:7", "binary_tree:10"}) {
    const Spectrum s = spectrum(build_topology(spec));
    for (double g : {0.0, 0.5, 0.95}) {
      const double v = effective_neighbors_transition(s, g);
      EXPECT_GE(v, 1.0 - 1e-12);
      EXPECT_LE(v, static_cast<double>(s.size()) + 1e-9);
    }
  }
}

TEST(BurnIn, Contract) {
  EXPECT_EQ(burn_in_steps(0.0), 100u);
  EXPECT_EQ(burn_in_steps(0.5), 100u);
  EXPECT_EQ(burn_in_steps(0.99), static_cast<std::size_t>(std::ceil(std::log(1e-6) / std::log(0.99))));
  EXPECT_EQ(burn_in_steps(1.0 - 1e-9), 1000000u);
}

TEST(MonteCarlo, AgreesWithClosedForm) {
  for (const char* spec : {"ring:8", "star:8"}) {
    const GossipMatrix w = build_topology(spec);
    const auto mc = effective_neighbors_montecarlo(TopologySchedule(w), 0.5, 0, 1500, 3);
    const double exact = effective_neighbors_closed(spectrum(w), 0.5).value;
    EXPECT_LE(std::abs(mc.value - exact), 4.0 * mc.standard_error) << spec;
    EXPECT_GT(mc.standard_error, 0.0);
    EXPECT_EQ(mc.method, NeighborMethod::MonteCarlo);
  }
}

TEST(MonteCarlo, ShortWalkIsRejected) {
  EXPECT_THROW(effective_neighbors_montecarlo(TopologySchedule(build_topology("ring:4")), 0.9, 10, 100, 1),
               InvalidArgument);
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  const TopologySchedule s(build_topology("torus:3x3"));
  set_thread_count(1);
  const auto a = effective_neighbors_montecarlo(s, 0.8, 0, 300, 99);
  set_thread_count(4);
  const auto b = effective_neighbors_montecarlo(s, 0.8, 0, 300, 99);
  set_thread_count(0);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(MonteCarlo, ExponentialScheduleLiesBetweenRingAndComplete) {
  const double g = 0.9;
  const auto mc = effective_neighbors_montecarlo(exponential_schedule(16), g, 0, 1500, 5);
  const double ring = effective_neighbors_closed(spectrum(build_topology("ring:16")), g).value;
  EXPECT_GT(mc.value, ring);
  EXPECT_LE(mc.value, 16.0 + 3.0 * mc.standard_error);
}

TEST(MMatrix, MatchesInversionOracle) {
  for (const char* spec : {"ring:6", "star:5", "chain:4", "torus:3x3"}) {
    const GossipMatrix w = build_topology(spec);
    for (double g : {0.0, 0.4, 0.9}) {
      const Matrix m = m_matrix(w, g).m;
      EXPECT_LE(max_abs_diff(m, oracle::from_eigen(oracle::m_matrix(w.weights(), g))), 1e-11) << spec;
    }
  }
}

TEST(MMatrix, SandwichedBetweenZeroAndIdentity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 3 + rng() % 12;
    const GossipMatrix w = metropolis_hastings(n, oracle::random_connected_edges(n, 0.3, rng), "r");
    const double g = std::uniform_real_distribution<double>(0.0, 0.99)(rng);
    const Matrix m = m_matrix(w, g).m;
    const auto ev = oracle::eigenvalues(m);
    EXPECT_GE(ev.back(), -1e-12);
    EXPECT_LE(ev.front(), 1.0 + 1e-12);
    // Rows sum to one: M shares W's constant eigenvector with eigenvalue 1.
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += m(i, j);
      EXPECT_NEAR(s, 1.0, 1e-11);
    }
  }
}

TEST(MMatrix, DiagonalNeighborsOnRegularGraphEqualsClosedForm) {
  const Spectrum s = spectrum(build_topology("ring:16"));
  for (double g : {0.1, 0.8}) {
    const auto m = m_matrix(s, g);
    EXPECT_TRUE(m.uniform_diagonal());
    EXPECT_NEAR(m.neighbors_from_diagonal(), effective_neighbors_closed(s, g).value, 1e-10);
  }
}

TEST(Beta, OrderingHoldsAndMatchesFormula) {
  for (const char* spec : {"ring:8", "star:6", "chain:5", "torus:3x3", "fully_connected:4"}) {
    const GossipMatrix w = build_topology(spec);
    const Spectrum s = spectrum(w);
    for (double g : {0.0, 0.5, 0.99}) {
      const double l2 = s.lambda2();
      const double b = beta(w, g);
      EXPECT_NEAR(b, (1 - g * l2 * l2) / (1 + l2), 1e-15);
      Eigen::MatrixXd gap = Eigen::MatrixXd::Identity(w.size(), w.size()) - oracle::to_eigen(w.weights()) -
                            b * (Eigen::MatrixXd::Identity(w.size(), w.size()) - oracle::m_matrix(w.weights(), g));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gap + gap.transpose()));
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10) << spec;
    }
  }
}

TEST(Covariance, MatchesSeriesAndIsPsd) {
  const GossipMatrix w = build_topology("ring:8");
  const double g = 0.9;
  const Matrix c = random_walk_covariance(w, g);
  const Eigen::MatrixXd W = oracle::to_eigen(w.weights());
  Eigen::MatrixXd P = W * W;
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(8, 8);
  double weight = 1;
  for (int m = 0; m < 1000; ++m) {
    ref += weight * P;
    P = P * W * W;
    weight *= g;
  }
  EXPECT_LE(max_abs_diff(c, oracle::from_eigen(ref)), 1e-10);
  EXPECT_GE(oracle::eigenvalues(c).back(), -1e-12);
}

TEST(SolveGamma, InvertsClosedForm) {
  const Spectrum s = spectrum(build_topology("ring:32"));
  for (double target : {5.0, 10.0, 25.0}) {
    const double g = solve_gamma_for_neighbors(s, target);
    EXPECT_NEAR(effective_neighbors_closed(s, g).value, target, 1e-8);
  }
  EXPECT_THROW(solve_gamma_for_neighbors(s, 40.0), InvalidArgument);
  EXPECT_THROW(solve_gamma_for_neighbors(s, 2.0), InvalidArgument);
  EXPECT_THROW(solve_gamma_for_neighbors(spectrum(build_topology("disconnected:4")), 2.0), InvalidArgument);
}
