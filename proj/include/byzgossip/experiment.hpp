#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "byzgossip/engine.hpp"

namespace byzgossip {

/// Graph source: an edge-list file or a named generator with numeric arguments.
///   complete n | path n | two_clique_bridge m k | three_clique_ghb m b
///   random_gamma n_honest n_byz edge_prob mu_min b seed
struct TopologySpec {
  std::optional<std::string> file;
  std::string generator;
  std::vector<double> args;
  /// Extra Byzantine nodes appended after generation; per_node = nullopt means "b".
  struct Attach {
    std::size_t count = 0;
    std::optional<std::size_t> per_node;
  };
  std::optional<Attach> byzantine;
};

Topology topology_from_generator(const std::string& name, const std::vector<double>& args);
Topology build_topology(const TopologySpec& spec, std::size_t b);

struct SweepAxes {
  std::vector<std::size_t> b;
  std::vector<AttackKind> attack;
  std::vector<Rule> rule;
  std::vector<std::uint64_t> seed;
};

struct ExperimentFile {
  std::string name = "experiment";
  TopologySpec topology;
  Rule rule = Rule::CGPlus;
  std::size_t b = 0;
  std::optional<double> eta;  // nullopt: 1 / mu_max(G)
  bool allow_large_eta = false;
  bool nna_per_node_step = false;
  AttackSpec attack;
  /// TwoWorld labels taken from the clique structure of the generator.
  bool clique_worlds = false;
  TaskSpec task;
  double rho = 0.0;
  double beta = 0.9;
  std::size_t rounds = 0;
  CommRounds comm_rounds_per_step;
  std::uint64_t seed = 0;
  MonitorMode monitor = MonitorMode::Record;
  SweepAxes sweep;
  std::string out_dir;
  std::string prefix;
};

/// Strict parse: unknown keys, missing required keys, empty sweep axes and
/// ill-typed values raise Config errors. Relative graph files resolve
/// against `base_dir`.
ExperimentFile parse_experiment(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentFile load_experiment(const std::string& path);

struct ExpandedRun {
  std::size_t index = 0;
  std::string stem;
  RunConfig config;
};

/// Cartesian product of the sweep axes in the order b, attack, rule, seed
/// (b outermost, seed innermost). Without axes, a single run.
std::vector<ExpandedRun> expand(const ExperimentFile& exp);

struct SweepOptions {
  std::string out_dir;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;
  bool no_monitor = false;
};

struct RunOutcome {
  std::size_t index = 0;
  std::string stem;
  std::string status;  // ok | violations | error
  std::string message;
  std::size_t rows = 0;
  std::size_t monitor_violations = 0;
  std::size_t error_violations = 0;
  std::size_t chain_violations = 0;
  double final_var_h = 0.0;
  double final_bias_drift = 0.0;
  double final_grad_norm_sq = 0.0;
  RunConfig config;
};

struct SweepReport {
  std::vector<RunOutcome> runs;
  /// 0 all checks pass, 1 a check failed or a run errored.
  int exit_code = 0;
};

/// Runs every expanded config on a worker pool, writing <stem>.csv and
/// <stem>.json per run and <prefix>-summary.csv once all workers finish.
/// Config errors propagate before any run starts.
SweepReport run_experiment(const ExperimentFile& exp, const SweepOptions& opts);

}  // namespace byzgossip
