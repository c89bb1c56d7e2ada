#pragma once

#include "vsbo/bo_loop.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace vsbo {

inline constexpr const char* kTraceHeader =
    "iter,x,y,best_y,selected,branch,wall_ms_fit,wall_ms_acq,cpu_ms_fit,cpu_ms_acq";

/// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);
/// Accepts anything format_double produces, including nan and +-inf.
double parse_double(const std::string& s);

void write_trace_csv(std::ostream& out, const Trace& trace);
/// Reads records only; Trace::selections is left empty.
/// Throws std::runtime_error with the offending line number on malformed input.
Trace read_trace_csv(std::istream& in);

/// Writes through a temporary file and renames, so readers never see a partial trace.
void save_trace(const std::filesystem::path& path, const Trace& trace);
Trace load_trace(const std::filesystem::path& path);

/// "<label>_seed<k>.csv"
std::string trace_filename(const std::string& label, std::uint64_t seed);
struct TraceName {
  std::string label;
  std::uint64_t seed = 0;
};
/// Inverse of trace_filename; nullopt for other names.
std::optional<TraceName> parse_trace_filename(const std::string& filename);

}  // namespace vsbo
