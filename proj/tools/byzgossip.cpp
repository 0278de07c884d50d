// byzgossip: spectra, simulate and verify subcommands.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "byzgossip/error.hpp"
#include "byzgossip/experiment.hpp"
#include "byzgossip/graph.hpp"
#include "byzgossip/network.hpp"
#include "byzgossip/verify.hpp"

using namespace byzgossip;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;

std::string default_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BYZGOSSIP_OUT")) return env;
  return "";
}

int cmd_spectra(const std::vector<std::string>& gen, const std::string& graph_file, std::optional<double> mu_min,
                std::optional<std::size_t> b_opt) {
  Topology t;
  if (!graph_file.empty()) {
    if (!gen.empty()) fail(ErrorKind::Config, "give a generator or --graph, not both");
    t = read_edge_list(graph_file);
  } else {
    if (gen.empty()) fail(ErrorKind::Config, "spectra needs a generator (e.g. 'complete 26') or --graph FILE");
    std::vector<double> args;
    for (std::size_t k = 1; k < gen.size(); ++k) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(gen[k], &used));
        if (used != gen[k].size()) throw std::invalid_argument(gen[k]);
      } catch (const std::exception&) {
        fail(ErrorKind::Config, "generator argument '" + gen[k] + "' is not a number");
      }
    }
    t = topology_from_generator(gen[0], args);
  }
  const Network net = Network::build(t);
  const std::size_t b = b_opt.value_or(t.max_byzantine_neighbors());
  const double bd = static_cast<double>(b);
  const double threshold = mu_min.value_or(2.0 * (bd + 1.0));
  const GammaReport g = verify_gamma_membership(t, threshold, b);
  json out;
  out["nodes"] = t.size();
  out["honest"] = t.honest_count();
  out["byzantine"] = t.byzantine().size();
  out["full"] = to_json(net.full_spectrum);
  out["honest_subgraph"] = to_json(net.honest_spectrum);
  out["honest_connected"] = net.honest_spectrum.connected();
  out["membership"] = {{"mu_min", threshold},
                       {"b", b},
                       {"member", g.member},
                       {"max_byzantine_neighbors", g.max_byzantine_neighbors}};
  if (!g.failing.empty()) out["membership"]["failing"] = g.failing;
  out["margins"] = {{"cgplus", net.honest_spectrum.mu2 - 2.0 * (bd + 1.0)}, {"nna", net.honest_spectrum.mu2 - 8.0 * bd}};
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_simulate(const std::string& config, const std::string& out, std::size_t jobs, std::optional<std::uint64_t> seed,
                 bool no_monitor) {
  const ExperimentFile exp = load_experiment(config);
  SweepOptions opts;
  opts.out_dir = default_out(out);
  opts.jobs = jobs;
  opts.seed_override = seed;
  opts.no_monitor = no_monitor;
  const SweepReport rep = run_experiment(exp, opts);
  std::cout << std::left << std::setw(24) << "run" << std::setw(12) << "rule" << std::setw(4) << "b" << std::setw(24)
            << "attack" << std::setw(12) << "status" << "final Var_H\n";
  for (const RunOutcome& o : rep.runs) {
    std::cout << std::setw(24) << o.stem << std::setw(12) << to_string(o.config.rule) << std::setw(4) << o.config.b
              << std::setw(24) << to_string(o.config.attack.kind) << std::setw(12) << o.status << o.final_var_h << '\n';
    if (o.status == "error") std::cerr << o.stem << ": " << o.message << '\n';
    if (o.status == "violations")
      std::cerr << o.stem << ": " << o.monitor_violations << " one-step, " << o.error_violations << " error-term and "
                << o.chain_violations << " chained-bound violations\n";
  }
  return rep.exit_code == 0 ? kOk : kCheckFailure;
}

int cmd_verify(const std::string& suite, const std::string& out, std::size_t trials, std::optional<std::uint64_t> seed,
               const std::string& configs, bool as_json) {
  VerifyOptions opts;
  opts.trials = trials;
  if (seed) opts.seed = *seed;
  opts.config_dir = configs;
  const std::vector<int> ids = suite_criteria(suite);
  Verifier v(opts);
  json report = json::array();
  bool ok = true;
  for (int id : ids) {
    const CriterionResult r = v.run(id);
    ok = ok && r.passed;
    report.push_back(to_json(r));
    if (!as_json)
      std::cout << (r.passed ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << std::left << std::setw(72)
                << r.title << std::right << std::fixed << std::setprecision(2) << std::setw(8) << r.seconds << "s\n"
                << "      " << r.detail << '\n'
                << std::defaultfloat;
  }
  if (as_json) std::cout << report.dump(2) << '\n';
  const std::string dir = default_out(out);
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    std::ofstream f(std::filesystem::path(dir) / ("verify-" + suite + ".json"));
    f << report.dump(2) << '\n';
  }
  return ok ? kOk : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust gossip simulator"};
  app.require_subcommand(1);

  auto* spectra = app.add_subcommand("spectra", "spectral report of a graph file or generator");
  std::vector<std::string> gen;
  std::string graph_file;
  std::optional<double> mu_min;
  std::optional<std::size_t> spectra_b;
  spectra->add_option("generator", gen, "generator name and arguments, e.g. three_clique_ghb 4 2");
  spectra->add_option("--graph", graph_file, "edge-list file");
  spectra->add_option("--mu-min", mu_min, "class threshold (default 2(b+1))");
  spectra->add_option("--b", spectra_b, "Byzantine neighbor budget (default: the graph's max Byzantine neighbors)");

  auto* simulate = app.add_subcommand("simulate", "run an experiment file");
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  bool no_monitor = false;
  simulate->add_option("--config", config, "experiment JSON")->required();
  simulate->add_option("--out", out, "output directory (default $BYZGOSSIP_OUT, then the config's output.dir)");
  simulate->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "override the seed of every run");
  simulate->add_flag("--no-monitor", no_monitor, "disable online theorem checks");

  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  std::string suite;
  std::size_t trials = 1000;
  std::string configs;
  bool as_json = false;
  std::string verify_out;
  std::optional<std::uint64_t> verify_seed;
  verify->add_option("suite", suite, "spectra | contraction | error-bounds | breakdown | dsgd | all")->required();
  verify->add_option("--trials", trials, "randomized trials per property suite");
  verify->add_option("--seed", verify_seed, "root seed of the randomized suites");
  verify->add_option("--configs", configs, "fixture config directory for the determinism check");
  verify->add_option("--out", verify_out, "write verify-<suite>.json here");
  verify->add_flag("--json", as_json, "print the machine-readable report instead of the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*spectra) return cmd_spectra(gen, graph_file, mu_min, spectra_b);
    if (*simulate) return cmd_simulate(config, out, jobs, seed, no_monitor);
    if (*verify) return cmd_verify(suite, verify_out, trials, verify_seed, configs, as_json);
  } catch (const Error& e) {
    std::cerr << "byzgossip: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config:
      case ErrorKind::Parse:
      case ErrorKind::InvalidArgument:
        return kConfigError;
      default:
        return kCheckFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "byzgossip: " << e.what() << '\n';
    return kCheckFailure;
  }
  return kOk;
}
