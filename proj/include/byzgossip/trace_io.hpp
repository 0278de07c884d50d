#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "byzgossip/engine.hpp"

namespace byzgossip {

inline constexpr const char* kTraceFormat = "byzgossip-trace v1";

/// Frozen column order of the trace CSV.
const std::vector<std::string>& trace_columns();

/// Comment line, column header, then one row per recorded round.
void write_trace_csv(std::ostream& out, const RunTrace& trace);
std::string trace_csv(const RunTrace& trace);

/// Parsed numeric rows of a trace CSV (comment and header skipped).
std::vector<std::vector<double>> read_trace_csv(std::istream& in);

/// Config echo, spectra, analytic constants, bounds and the run summary.
nlohmann::json trace_header_json(const RunTrace& trace);

/// 64-bit FNV-1a of a byte string, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace byzgossip
