#include "vsbo/trace_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <stdexcept>
#include <vector>

namespace vsbo {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_x(const Vector& x) {
  std::string s;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (j) s.push_back('|');
    s += format_double(x[j]);
  }
  return s;
}

std::string join_indices(const IndexSet& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s.push_back('|');
    s += std::to_string(idx[i]);
  }
  return s;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  if (s.empty()) throw std::runtime_error("empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const TraceRecord& r : trace.records) {
    out << r.iter << ',' << join_x(r.x) << ',' << format_double(r.y) << ',' << format_double(r.best_y) << ','
        << join_indices(r.selected) << ',' << (r.branch == SelectionBranch::None ? "" : to_string(r.branch)) << ','
        << format_double(r.wall_ms_fit) << ',' << format_double(r.wall_ms_acq) << ','
        << format_double(r.cpu_ms_fit) << ',' << format_double(r.cpu_ms_acq) << '\n';
  }
}

Trace read_trace_csv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw std::runtime_error("trace: unexpected header");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const std::vector<std::string> f = split(line, ',');
      if (f.size() != 10) throw std::runtime_error("expected 10 fields, got " + std::to_string(f.size()));
      TraceRecord r;
      r.iter = parse_int(f[0]);
      const std::vector<std::string> xs = split(f[1], '|');
      r.x.resize(static_cast<Eigen::Index>(xs.size()));
      for (std::size_t j = 0; j < xs.size(); ++j) r.x[static_cast<Eigen::Index>(j)] = parse_double(xs[j]);
      r.y = parse_double(f[2]);
      r.best_y = parse_double(f[3]);
      if (!f[4].empty()) {
        for (const std::string& s : split(f[4], '|')) r.selected.push_back(parse_int(s));
      }
      r.branch = f[5].empty() ? SelectionBranch::None : selection_branch_from_string(f[5]);
      r.wall_ms_fit = parse_double(f[6]);
      r.wall_ms_acq = parse_double(f[7]);
      r.cpu_ms_fit = parse_double(f[8]);
      r.cpu_ms_acq = parse_double(f[9]);
      trace.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    write_trace_csv(out, trace);
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return read_trace_csv(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string trace_filename(const std::string& label, std::uint64_t seed) {
  return label + "_seed" + std::to_string(seed) + ".csv";
}

std::optional<TraceName> parse_trace_filename(const std::string& filename) {
  static const std::regex re(R"((.+)_seed([0-9]+)\.csv)");
  std::smatch m;
  if (!std::regex_match(filename, m, re)) return std::nullopt;
  TraceName n;
  n.label = m[1];
  try {
    n.seed = std::stoull(m[2]);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return n;
}

}  // namespace vsbo
