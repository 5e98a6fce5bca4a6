#include <gtest/gtest.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "topodsgd/csv.hpp"

using topodsgd::tools::run_cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("topodsgd_cli_" + name);
}

}  // namespace

TEST(Cli, TopologyCsvAndValidation) {
  const Result r = run({"topology", "ring:32"});
  ASSERT_EQ(r.code, 0) << r.err;
  const topodsgd::Matrix m = topodsgd::matrix_from_csv(r.out);
  EXPECT_EQ(m.rows(), 32u);
  EXPECT_EQ(m.cols(), 32u);
  EXPECT_NE(r.err.find("valid"), std::string::npos);
}

TEST(Cli, TopologyErrorsExitTwo) {
  const Result r = run({"topology", "hypercube:12"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("n must be a power of two"), std::string::npos);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"rate", "ring:8"}).code, 2);  // --zeta missing
}

TEST(Cli, IoErrorExitFour) {
  EXPECT_EQ(run({"--out", "/nonexistent/dir/x.csv", "topology", "ring:4"}).code, 4);
  EXPECT_EQ(run({"fit-gamma", "--ensemble", "/nonexistent/e.csv", "--topology", "ring:4"}).code, 4);
}

TEST(Cli, JsonHasSchemaVersion) {
  const Result r = run({"--format", "json", "effneigh", "ring:32", "--gammas", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_NEAR(j["rows"][0]["n_eff"].get<double>(), 3.0, 1e-9);
}

TEST(Cli, RateOptimalEndpoints) {
  Result r = run({"--format", "json", "rate", "disconnected:1", "--zeta", "22", "--optimal"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(nlohmann::json::parse(r.out)["rows"][0]["eta"].get<double>(), 1.0 / 22.0, 1e-6);
  r = run({"--format", "json", "rate", "fully_connected:32", "--zeta", "22", "--optimal"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(nlohmann::json::parse(r.out)["rows"][0]["eta"].get<double>(), 32.0 / 53.0, 1e-6);
}

TEST(Cli, SimulateIsByteIdentical) {
  const std::vector<std::string> args = {"--quiet", "simulate", "ring:8", "--d", "5", "--eta", "0.1", "--steps", "30",
                                         "--reps", "20"};
  const Result a = run(args);
  const Result b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, 11), "step,value\n");
}

TEST(Cli, SimulateZeroLearningRateIsFlat) {
  const Result r = run({"--quiet", "simulate", "ring:4", "--eta", "0", "--steps", "10", "--reps", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const topodsgd::Matrix m = topodsgd::matrix_from_csv(r.out.substr(r.out.find('\n') + 1));
  for (std::size_t t = 0; t < m.rows(); ++t) EXPECT_NEAR(m(t, 1), m(0, 1), 1e-12);
}

TEST(Cli, SimulateWritesSvg) {
  const auto svg = temp_file("trace.svg");
  const Result r = run({"--quiet", "simulate", "ring:4", "--eta", "0.1", "--steps", "10", "--reps", "5", "--svg",
                        svg.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = topodsgd::read_text_file(svg);
  EXPECT_NE(text.find("<polyline"), std::string::npos);
  std::filesystem::remove(svg);
}

TEST(Cli, FitGammaFromFileAndMalformedInput) {
  const auto ens = temp_file("ens.csv");
  ASSERT_EQ(run({"--quiet", "fit-gamma", "--generate", "ring:8", "0.8", "500", "--save-ensemble", ens.string()}).code,
            0);
  const Result r = run({"--quiet", "fit-gamma", "--ensemble", ens.string(), "--topology", "ring:8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["schema_version"], 1);

  topodsgd::write_text_file(ens, "w0,w1\n1,2\n3,oops\n");
  const Result bad = run({"fit-gamma", "--ensemble", ens.string(), "--topology", "chain:2"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos) << bad.err;
  std::filesystem::remove(ens);
}

TEST(Cli, FitGammaFullyConnectedFlag) {
  const Result r = run({"--quiet", "fit-gamma", "--generate", "fully_connected:8", "0.9", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(nlohmann::json::parse(r.out)["fit"]["identifiable"].get<bool>());
}

TEST(Cli, BoundsAndRandomized) {
  Result r = run({"--quiet", "bounds", "ring:16", "--zeta", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "topology,gamma,n_eff,beta,lr_main,lr_general,lr_corollary");
  r = run({"--quiet", "randomized", "ring:4", "--d", "10", "--steps", "50", "--reps", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "step,mean,stderr,distance_term,consensus_term");
}

TEST(Cli, ReportSortedByPredictedRate) {
  const Result r = run({"--quiet", "--format", "json", "report", "--topologies", "ring:4,ring:8,ring:16", "--zeta",
                        "100", "--reps", "300"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = nlohmann::json::parse(r.out)["rows"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["topology"], "ring:16");
  for (std::size_t k = 1; k < rows.size(); ++k)
    EXPECT_GE(rows[k - 1]["predicted_rate"].get<double>(), rows[k]["predicted_rate"].get<double>());
}
