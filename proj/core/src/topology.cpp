#include "topodsgd/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "topodsgd/eigen_jacobi.hpp"
#include "topodsgd/error.hpp"

namespace topodsgd {

namespace {

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw InvalidArgument("malformed " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t log2_exact(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

std::vector<Edge> ring_edges(std::size_t n) {
  std::vector<Edge> e;
  if (n == 2) {
    e.push_back({0, 1});
  } else if (n >= 3) {
    for (std::size_t i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  }
  return e;
}

std::vector<Edge> chain_edges(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return e;
}

std::vector<Edge> star_edges(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i < n; ++i) e.push_back({0, i});
  return e;
}

std::vector<Edge> torus_edges(std::size_t rows, std::size_t cols) {
  std::vector<Edge> e;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t id = r * cols + c;
      e.push_back({id, r * cols + (c + 1) % cols});
      e.push_back({id, ((r + 1) % rows) * cols + c});
    }
  }
  return e;
}

std::vector<Edge> binary_tree_edges(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i < n; ++i) e.push_back({(i - 1) / 2, i});
  return e;
}

std::vector<Edge> hypercube_edges(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t bit = 1; bit < n; bit <<= 1)
      if ((i & bit) == 0) e.push_back({i, i | bit});
  return e;
}

std::vector<Edge> complete_edges(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.push_back({i, j});
  return e;
}

std::string format_deviation(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", d);
  return buf;
}

}  // namespace

GossipMatrix::GossipMatrix(Matrix weights, std::vector<Edge> edges, std::string label)
    : weights_(std::move(weights)), edges_(std::move(edges)), label_(std::move(label)) {
  if (!weights_.square() || weights_.rows() == 0) {
    throw InvalidArgument("gossip matrix must be square and non-empty");
  }
}

std::vector<std::size_t> GossipMatrix::degrees() const {
  std::vector<std::size_t> deg(size(), 0);
  for (const Edge& e : edges_) {
    ++deg[e.a];
    ++deg[e.b];
  }
  return deg;
}

GossipMatrix metropolis_hastings(std::size_t n, std::vector<Edge> edges, std::string label) {
  if (n == 0) throw InvalidArgument("topology needs at least one worker");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : edges) {
    if (e.a >= n || e.b >= n) throw InvalidArgument("edge endpoint out of range");
    if (e.a == e.b) throw InvalidArgument("self-loop on node " + std::to_string(e.a) + " (graph must be simple)");
    const auto key = std::minmax(e.a, e.b);
    if (!seen.insert(key).second) {
      throw InvalidArgument("duplicate edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                            " (graph must be simple)");
    }
    ++deg[e.a];
    ++deg[e.b];
  }

  Matrix w(n, n);
  for (const Edge& e : edges) {
    const double weight = 1.0 / static_cast<double>(std::max(deg[e.a], deg[e.b]) + 1);
    w(e.a, e.b) = weight;
    w(e.b, e.a) = weight;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return GossipMatrix(std::move(w), std::move(edges), std::move(label));
}

GossipMatrix load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read edge list '" + path + "'");
  std::vector<Edge> edges;
  std::size_t n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a)) continue;
    if (!(fields >> b) || (fields >> extra)) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected 'i j'");
    }
    const Edge e{parse_count(a, "node index"), parse_count(b, "node index")};
    n = std::max({n, e.a + 1, e.b + 1});
    edges.push_back(e);
  }
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  if (n == 0) throw InvalidArgument("edge list '" + path + "' contains no edges");
  return metropolis_hastings(n, std::move(edges), "edge_list:" + path);
}

GossipMatrix build_topology(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("malformed topology spec '" + std::string(spec) + "' (expected kind:dims)");
  }
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view dims = spec.substr(colon + 1);
  const std::string label(spec);

  if (kind == "edge_list") {
    if (dims.empty()) throw InvalidArgument("edge_list spec needs a path");
    return load_edge_list(std::string(dims));
  }
  if (kind == "torus") {
    const auto x = dims.find('x');
    if (x == std::string_view::npos) throw InvalidArgument("torus spec must be torus:RxC");
    const std::size_t rows = parse_count(dims.substr(0, x), "torus rows");
    const std::size_t cols = parse_count(dims.substr(x + 1), "torus columns");
    if (rows < 3 || cols < 3) throw InvalidArgument("torus needs R, C >= 3 to be 4-regular");
    return metropolis_hastings(rows * cols, torus_edges(rows, cols), label);
  }

  const std::size_t n = parse_count(dims, "worker count");
  if (n == 0) throw InvalidArgument("worker count must be at least 1");
  if (kind == "ring") return metropolis_hastings(n, ring_edges(n), label);
  if (kind == "chain") return metropolis_hastings(n, chain_edges(n), label);
  if (kind == "star") return metropolis_hastings(n, star_edges(n), label);
  if (kind == "binary_tree") return metropolis_hastings(n, binary_tree_edges(n), label);
  if (kind == "fully_connected") return metropolis_hastings(n, complete_edges(n), label);
  if (kind == "disconnected") return metropolis_hastings(n, {}, label);
  if (kind == "hypercube") {
    if (!is_power_of_two(n)) throw InvalidArgument("hypercube: n must be a power of two");
    return metropolis_hastings(n, hypercube_edges(n), label);
  }
  throw InvalidArgument("unknown topology kind '" + std::string(kind) + "'");
}

std::string Violation::message() const {
  return invariant + " violated, deviation " + format_deviation(deviation);
}

std::string ValidationReport::to_string() const {
  if (valid()) return "valid";
  std::string out;
  for (const Violation& v : violations) {
    if (!out.empty()) out += '\n';
    out += v.message();
  }
  return out;
}

ValidationReport validate(const Matrix& w, const std::vector<Edge>* declared_edges) {
  ValidationReport report;
  if (!w.square() || w.rows() == 0) {
    report.violations.push_back({"shape", static_cast<double>(std::max(w.rows(), w.cols()))});
    return report;
  }
  const std::size_t n = w.rows();

  const double asym = asymmetry(w);
  if (asym > kSymmetryTolerance) report.violations.push_back({"symmetry", asym});

  double most_negative = 0.0;
  for (double v : w.data()) most_negative = std::min(most_negative, v);
  if (most_negative < -kSymmetryTolerance) report.violations.push_back({"nonnegativity", -most_negative});

  double row_dev = 0.0;
  double col_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      r += w(i, j);
      c += w(j, i);
    }
    row_dev = std::max(row_dev, std::abs(r - 1.0));
    col_dev = std::max(col_dev, std::abs(c - 1.0));
  }
  if (row_dev > kStochasticTolerance) report.violations.push_back({"row-stochasticity", row_dev});
  if (col_dev > kStochasticTolerance) report.violations.push_back({"column-stochasticity", col_dev});

  if (declared_edges != nullptr) {
    std::vector<char> allowed(n * n, 0);
    for (const Edge& e : *declared_edges) {
      if (e.a >= n || e.b >= n) {
        report.violations.push_back({"zero-pattern", static_cast<double>(std::max(e.a, e.b))});
        return report;
      }
      allowed[e.a * n + e.b] = 1;
      allowed[e.b * n + e.a] = 1;
    }
    double stray = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && !allowed[i * n + j]) stray = std::max(stray, std::abs(w(i, j)));
    if (stray > 0.0) report.violations.push_back({"zero-pattern", stray});
  }
  return report;
}

ValidationReport validate(const GossipMatrix& w) { return validate(w.weights(), &w.edges()); }

double Spectrum::lambda2() const {
  if (eigenvalues.size() < 2) throw InvalidArgument("lambda_2 is undefined for a single worker");
  return eigenvalues[1];
}

Matrix Spectrum::reconstruct() const {
  const std::size_t n = size();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = eigenvalues[k] * eigenvectors(i, k);
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * eigenvectors(j, k);
    }
  return out;
}

Spectrum spectrum(const Matrix& weights) {
  if (!weights.square() || weights.rows() == 0) throw InvalidArgument("spectrum needs a non-empty square matrix");
  const double asym = asymmetry(weights);
  if (asym > kSymmetryTolerance) {
    throw InvalidArgument("spectrum: matrix is not symmetric (deviation " + format_deviation(asym) + ")");
  }
  SymmetricEigen eig = jacobi_eigen(weights);
  // Eigenvalues of a doubly-stochastic matrix lie in [-1, 1]; rounding can
  // push the unit ones a few ulps off, which matters as gamma -> 1.
  for (double& v : eig.values) {
    if (std::abs(std::abs(v) - 1.0) <= 1e-13) v = std::copysign(1.0, v);
  }
  return Spectrum{std::move(eig.values), std::move(eig.vectors)};
}

Spectrum spectrum(const GossipMatrix& w) { return spectrum(w.weights()); }

double spectral_gap(const Spectrum& s) {
  if (s.size() < 2) throw InvalidArgument("spectral gap is undefined for a single worker");
  return 1.0 - s.eigenvalues[1];
}

double spectral_gap(const GossipMatrix& w) { return spectral_gap(spectrum(w)); }

TopologySchedule::TopologySchedule(GossipMatrix fixed)
    : n_(fixed.size()),
      kind_(ScheduleKind::Static),
      label_(fixed.label()),
      fixed_(std::make_shared<const GossipMatrix>(std::move(fixed))) {}

TopologySchedule::TopologySchedule(std::size_t n, Generator generator, std::string label)
    : n_(n), kind_(ScheduleKind::TimeVarying), label_(std::move(label)), generator_(std::move(generator)) {
  if (!generator_) throw InvalidArgument("time-varying schedule needs a generator");
}

GossipMatrix TopologySchedule::at(std::size_t t) const {
  if (fixed_) return *fixed_;
  GossipMatrix w = generator_(t);
  if (w.size() != n_) throw InvalidArgument("schedule generator returned a matrix of the wrong size");
  return w;
}

const GossipMatrix& TopologySchedule::fixed() const {
  if (!fixed_) throw InvalidArgument("schedule '" + label_ + "' is time-varying");
  return *fixed_;
}

TopologySchedule exponential_schedule(std::size_t n) {
  if (n < 2 || !is_power_of_two(n)) {
    throw InvalidArgument("exponential schedule: n must be a power of two >= 2");
  }
  const std::size_t k = log2_exact(n);
  auto generator = [n, k](std::size_t t) {
    const std::size_t bit = std::size_t{1} << (t % k);
    Matrix w(n, n);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i ^ bit;
      w(i, i) = 0.5;
      w(i, j) = 0.5;
      if (i < j) edges.push_back({i, j});
    }
    return GossipMatrix(std::move(w), std::move(edges), "exp:" + std::to_string(n) + "@" + std::to_string(t));
  };
  return TopologySchedule(n, generator, "exp:" + std::to_string(n));
}

TopologySchedule build_schedule(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon != std::string_view::npos) {
    const std::string_view kind = spec.substr(0, colon);
    if (kind == "exp" || kind == "exponential") {
      return exponential_schedule(parse_count(spec.substr(colon + 1), "worker count"));
    }
  }
  return TopologySchedule(build_topology(spec));
}

}  // namespace topodsgd
