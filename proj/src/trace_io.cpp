#include "byzgossip/trace_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "byzgossip/error.hpp"

namespace byzgossip {

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "round",        "var_h",        "bias_drift",    "mse_to_initial_mean", "grad_norm_sq",
      "step_prev_var", "step_spread", "step_bias_sq",  "error_norm_sq",       "error_bound",
      "zeta",         "clipped",      "violations",    "error_violations"};
  return cols;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_columns() {
  std::string s;
  for (const std::string& c : trace_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  const std::string cols = join_columns();
  out << "# " << kTraceFormat << " columns: " << cols << '\n' << cols << '\n';
  for (const RoundRecord& r : trace.rows) {
    out << r.round << ',' << num(r.var_h) << ',' << num(r.bias_drift) << ',' << num(r.mse_to_initial_mean) << ','
        << num(r.grad_norm_sq) << ',' << num(r.step_prev_var) << ',' << num(r.step_spread) << ','
        << num(r.step_bias_sq) << ',' << num(r.error_norm_sq) << ',' << num(r.error_bound) << ',' << num(r.zeta)
        << ',' << r.clipped << ',' << r.violations << ',' << r.error_violations << '\n';
  }
}

std::string trace_csv(const RunTrace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

std::vector<std::vector<double>> read_trace_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != join_columns()) fail(ErrorKind::Parse, "trace line " + std::to_string(lineno) + ": unexpected columns");
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, "trace line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != trace_columns().size())
      fail(ErrorKind::Parse, "trace line " + std::to_string(lineno) + ": wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json trace_header_json(const RunTrace& trace) {
  const RunHeader& h = trace.header;
  nlohmann::json j;
  j["format"] = kTraceFormat;
  j["columns"] = trace_columns();
  j["config"] = {{"name", h.name},
                 {"rule", std::string(to_string(h.rule))},
                 {"b", h.b},
                 {"eta", h.eta},
                 {"attack", std::string(to_string(h.attack))},
                 {"task", std::string(to_string(h.task))},
                 {"dim", h.dim},
                 {"rho", h.rho},
                 {"beta", h.beta},
                 {"rounds", h.rounds},
                 {"comm_rounds_per_step", h.comm_rounds_per_step},
                 {"seed", h.seed},
                 {"monitor", std::string(to_string(h.monitor))}};
  j["spectra"] = {{"full", to_json(h.full_spectrum)}, {"honest", to_json(h.honest_spectrum)}};
  j["membership"] = {{"member", h.membership.member},
                     {"mu2", h.membership.mu2},
                     {"max_byzantine_neighbors", h.membership.max_byzantine_neighbors}};
  j["constants"] = {{"L", h.smoothness},
                    {"sigma", h.noise_sigma},
                    {"zeta_het_sq", h.heterogeneity_sq},
                    {"delta", h.bounds.delta},
                    {"gamma", h.honest_spectrum.gamma}};
  j["bounds"] = to_json(h.bounds);
  j["preconditions"] = h.preconditions;
  nlohmann::json summary;
  summary["rows"] = trace.rows.size();
  if (!trace.rows.empty()) {
    const RoundRecord& last = trace.rows.back();
    summary["final_var_h"] = last.var_h;
    summary["final_bias_drift"] = last.bias_drift;
    summary["final_grad_norm_sq"] = last.grad_norm_sq;
  }
  summary["monitor_violations"] = trace.monitor_violations;
  summary["error_violations"] = trace.error_violations;
  j["summary"] = summary;
  j["chain_check"] = to_json(check_run(trace));
  return j;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace byzgossip
