#include "topodsgd/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "topodsgd/error.hpp"

namespace topodsgd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_field(std::string_view field, std::size_t line, std::size_t column) {
  const std::string s(field);
  if (s.empty()) {
    throw InvalidArgument("line " + std::to_string(line) + ", field " + std::to_string(column) + ": empty value");
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw InvalidArgument("line " + std::to_string(line) + ", field " + std::to_string(column) +
                          ": not a number: '" + s + "'");
  }
  return v;
}

// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++number;
    if (!trim(line).empty()) out.emplace_back(number, line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

Matrix parse_rows(const std::vector<std::pair<std::size_t, std::string_view>>& lines, std::size_t first) {
  if (lines.size() <= first) throw InvalidArgument("no data rows");
  const std::size_t cols = split_fields(lines[first].second).size();
  Matrix m(lines.size() - first, cols);
  for (std::size_t r = first; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r].second);
    if (fields.size() != cols) {
      throw InvalidArgument("line " + std::to_string(lines[r].first) + ": expected " + std::to_string(cols) +
                            " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) m(r - first, c) = parse_field(fields[c], lines[r].first, c + 1);
  }
  return m;
}

void row(std::string& out, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += ',';
    out += f;
    first = false;
  }
  out += '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text) { return parse_rows(lines_of(text), 0); }

std::string ensemble_to_csv(const WorkerEnsemble& e) {
  std::string out;
  for (std::size_t j = 0; j < e.workers(); ++j) {
    if (j) out += ',';
    out += "w" + std::to_string(j);
  }
  out += '\n';
  return out + matrix_to_csv(e.samples);
}

WorkerEnsemble ensemble_from_csv(std::string_view text, std::string source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw InvalidArgument("ensemble CSV is empty");
  const auto header = split_fields(lines[0].second);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] != "w" + std::to_string(j)) {
      throw InvalidArgument("line " + std::to_string(lines[0].first) + ", field " + std::to_string(j + 1) +
                            ": expected header 'w" + std::to_string(j) + "', found '" + std::string(header[j]) + "'");
    }
  }
  WorkerEnsemble e;
  e.samples = parse_rows(lines, 1);
  if (e.samples.cols() != header.size()) {
    throw InvalidArgument("data rows have " + std::to_string(e.samples.cols()) + " fields but the header names " +
                          std::to_string(header.size()) + " workers");
  }
  e.source = std::move(source);
  e.validate();
  return e;
}

std::string trace_to_csv(const SimTrace& trace) {
  std::string out = "step,value\n";
  for (std::size_t t = 0; t < trace.values.size(); ++t) row(out, {std::to_string(t), format_double(trace.values[t])});
  return out;
}

std::string rate_sweep_to_csv(const std::vector<RateRow>& rows) {
  std::string out = "eta,rate,gamma_star,n_eff,diverged\n";
  for (const auto& r : rows) {
    row(out, {format_double(r.eta), format_double(r.solution.rate), format_double(r.solution.gamma_star),
              format_double(r.solution.n_eff), r.solution.diverged ? "1" : "0"});
  }
  return out;
}

std::string neighbors_to_csv(const std::vector<NeighborRow>& rows) {
  std::string out = "topology,gamma,n_eff,method,stderr\n";
  for (const auto& r : rows) {
    row(out, {r.topology, format_double(r.value.gamma), format_double(r.value.value), to_string(r.value.method),
              format_double(r.value.standard_error)});
  }
  return out;
}

std::string lyapunov_to_csv(const LyapunovTrace& trace) {
  std::string out = "step,mean,stderr,distance_term,consensus_term\n";
  for (std::size_t t = 0; t < trace.mean.size(); ++t) {
    row(out, {std::to_string(t), format_double(trace.mean[t]), format_double(trace.standard_error[t]),
              format_double(trace.distance[t]), format_double(trace.consensus[t])});
  }
  return out;
}

std::string bounds_to_csv(const std::vector<BoundRow>& rows) {
  std::string out = "topology,gamma,n_eff,beta,lr_main,lr_general,lr_corollary\n";
  for (const auto& r : rows) {
    row(out, {r.topology, format_double(r.gamma), format_double(r.n_eff), format_double(r.beta),
              format_double(r.lr_main), format_double(r.lr_general), format_double(r.lr_corollary)});
  }
  return out;
}

std::string fit_report_to_csv(const FitReport& report) {
  std::string out = "topology,gamma_hat,mse,n_eff_at_fit,n_eff_at_shared_gamma,spectral_gap,shared_gamma\n";
  for (const auto& r : report.rows) {
    row(out, {r.topology, format_double(r.fit.gamma), format_double(r.fit.mse), format_double(r.fit.n_eff),
              format_double(r.n_eff_at_shared_gamma), format_double(r.spectral_gap), format_double(r.shared_gamma)});
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace topodsgd
