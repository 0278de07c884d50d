#include "byzgossip/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "byzgossip/error.hpp"
#include "byzgossip/trace_io.hpp"

namespace byzgossip {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  fail(ErrorKind::Config, where + ": " + what);
}

/// Object reader that remembers which keys were consumed.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) config_error(where_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key) {
    if (!j_.contains(key)) config_error(where_, "missing required key '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  const json* opt(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) config_error(where_, "unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(where, "expected a finite number");
  return d;
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  config_error(where, "expected a non-negative integer");
}

std::size_t as_size(const json& v, const std::string& where) { return static_cast<std::size_t>(as_u64(v, where)); }

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) config_error(where, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) config_error(where, "expected a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> as_list(const json& v, const std::string& where, F&& each) {
  if (!v.is_array()) config_error(where, "expected a list");
  if (v.empty()) config_error(where, "empty list");
  std::vector<T> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(each(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::size_t arg_size(const std::vector<double>& args, std::size_t k, const std::string& gen) {
  const double v = args[k];
  if (v < 0 || v != std::floor(v)) config_error(gen, "argument " + std::to_string(k + 1) + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

TopologySpec parse_topology(const json& j, const std::string& base_dir) {
  Fields f(j, "topology");
  TopologySpec spec;
  if (const json* file = f.opt("file")) {
    fs::path p = as_string(*file, f.path("file"));
    if (p.is_relative()) p = fs::path(base_dir) / p;
    spec.file = p.string();
    if (f.has("generator") || f.has("args")) config_error("topology", "give either 'file' or 'generator', not both");
  } else {
    spec.generator = as_string(f.get("generator"), f.path("generator"));
    if (const json* a = f.opt("args"))
      spec.args = as_list<double>(*a, f.path("args"), [](const json& v, const std::string& w) { return as_number(v, w); });
  }
  if (const json* byz = f.opt("byzantine")) {
    Fields bf(*byz, "topology.byzantine");
    TopologySpec::Attach at;
    at.count = as_size(bf.get("count"), bf.path("count"));
    const json& per = bf.get("per_node");
    if (per.is_string()) {
      if (per.get<std::string>() != "b") config_error(bf.path("per_node"), "expected an integer or \"b\"");
    } else {
      at.per_node = as_size(per, bf.path("per_node"));
    }
    bf.finish();
    spec.byzantine = at;
  }
  f.finish();
  return spec;
}

AttackSpec parse_attack(const json& j, bool& clique_worlds) {
  AttackSpec a;
  if (j.is_string()) {
    a.kind = attack_from_string(j.get<std::string>());
    return a;
  }
  Fields f(j, "attack");
  a.kind = attack_from_string(as_string(f.get("kind"), f.path("kind")));
  if (const json* s = f.opt("scaling")) {
    if (s->is_string()) {
      if (s->get<std::string>() != "grid") config_error(f.path("scaling"), "expected \"grid\", a number or a grid object");
    } else if (s->is_number()) {
      a.scaling = as_number(*s, f.path("scaling"));
    } else {
      Fields g(*s, f.path("scaling"));
      ScalingGrid grid;
      grid.values = as_list<double>(g.get("values"), g.path("values"),
                                    [](const json& v, const std::string& w) { return as_number(v, w); });
      if (const json* n = g.opt("normalize")) grid.normalize = as_bool(*n, g.path("normalize"));
      g.finish();
      a.scaling = grid;
    }
  }
  if (const json* c = f.opt("centered")) a.centered_on_target = as_bool(*c, f.path("centered"));
  if (const json* p = f.opt("per_target")) a.per_target_search = as_bool(*p, f.path("per_target"));
  if (const json* w = f.opt("worlds")) {
    if (w->is_string()) {
      if (w->get<std::string>() != "cliques") config_error(f.path("worlds"), "expected \"cliques\" or a label list");
      clique_worlds = true;
    } else {
      a.worlds = as_list<int>(*w, f.path("worlds"), [](const json& v, const std::string& wh) {
        if (!v.is_number_integer()) config_error(wh, "expected an integer label");
        return v.get<int>();
      });
    }
  }
  f.finish();
  return a;
}

TaskSpec parse_task(const json& j) {
  Fields f(j, "task");
  TaskSpec t;
  t.kind = task_from_string(as_string(f.get("kind"), f.path("kind")));
  if (const json* v = f.opt("dim")) t.dim = as_size(*v, f.path("dim"));
  if (const json* v = f.opt("center")) t.center = as_number(*v, f.path("center"));
  if (const json* v = f.opt("spread")) t.spread = as_number(*v, f.path("spread"));
  if (const json* v = f.opt("curvature")) t.curvature = as_number(*v, f.path("curvature"));
  if (const json* v = f.opt("noise_sigma")) t.noise_sigma = as_number(*v, f.path("noise_sigma"));
  if (const json* v = f.opt("init")) t.init = as_number(*v, f.path("init"));
  if (const json* v = f.opt("init_jitter")) t.init_jitter = as_number(*v, f.path("init_jitter"));
  if (const json* v = f.opt("samples_per_node")) t.samples_per_node = as_size(*v, f.path("samples_per_node"));
  if (const json* v = f.opt("l2")) t.l2 = as_number(*v, f.path("l2"));
  if (const json* v = f.opt("feature_shift")) t.feature_shift = as_number(*v, f.path("feature_shift"));
  if (const json* v = f.opt("targets")) {
    const auto rows = as_list<std::vector<double>>(*v, f.path("targets"), [](const json& r, const std::string& w) {
      return as_list<double>(r, w, [](const json& x, const std::string& wx) { return as_number(x, wx); });
    });
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) config_error(f.path("targets"), "ragged target rows");
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    if (f.has("dim") && static_cast<std::size_t>(m.cols()) != t.dim)
      config_error(f.path("targets"), "target width disagrees with dim");
    t.dim = static_cast<std::size_t>(m.cols());
    t.targets = m;
  }
  f.finish();
  return t;
}

std::string format_index(std::size_t k) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%03zu", k);
  return buf;
}

}  // namespace

Topology topology_from_generator(const std::string& name, const std::vector<double>& args) {
  auto want = [&](std::size_t n) {
    if (args.size() != n)
      config_error(name, "expects " + std::to_string(n) + " arguments, got " + std::to_string(args.size()));
  };
  try {
    if (name == "complete") {
      want(1);
      return complete_graph(arg_size(args, 0, name));
    }
    if (name == "path") {
      want(1);
      return path_graph(arg_size(args, 0, name));
    }
    if (name == "two_clique_bridge") {
      want(2);
      return two_clique_bridge(arg_size(args, 0, name), arg_size(args, 1, name));
    }
    if (name == "three_clique_ghb") {
      want(2);
      return three_clique_ghb(arg_size(args, 0, name), arg_size(args, 1, name));
    }
    if (name == "random_gamma") {
      want(6);
      GammaGraphParams p;
      p.n_honest = arg_size(args, 0, name);
      p.n_byz = arg_size(args, 1, name);
      p.edge_prob = args[2];
      p.mu_min = args[3];
      p.b = arg_size(args, 4, name);
      return random_gamma_graph(p, static_cast<std::uint64_t>(arg_size(args, 5, name)));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    config_error(name, e.what());
  }
  config_error("topology", "unknown generator '" + name + "'");
}

Topology build_topology(const TopologySpec& spec, std::size_t b) {
  Topology t;
  if (spec.file) {
    try {
      t = read_edge_list(*spec.file);
    } catch (const Error& e) {
      fail(ErrorKind::Config, e.what());
    }
  } else {
    t = topology_from_generator(spec.generator, spec.args);
  }
  if (spec.byzantine) {
    const std::size_t per = spec.byzantine->per_node.value_or(b);
    try {
      t = attach_byzantine(t, spec.byzantine->count, per);
    } catch (const Error& e) {
      config_error("topology.byzantine", e.what());
    }
  }
  return t;
}

ExperimentFile parse_experiment(const json& doc, const std::string& base_dir) {
  Fields f(doc, "experiment");
  ExperimentFile e;
  if (const json* v = f.opt("name")) e.name = as_string(*v, "name");
  e.topology = parse_topology(f.get("topology"), base_dir);
  e.rule = rule_from_string(as_string(f.get("rule"), "rule"));
  if (const json* v = f.opt("b")) e.b = as_size(*v, "b");
  if (const json* v = f.opt("eta")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "auto") config_error("eta", "expected \"auto\" or a number");
    } else {
      e.eta = as_number(*v, "eta");
      if (!(*e.eta > 0.0)) config_error("eta", "must be positive");
    }
  }
  if (const json* v = f.opt("allow_large_eta")) e.allow_large_eta = as_bool(*v, "allow_large_eta");
  if (const json* v = f.opt("nna_per_node_step")) e.nna_per_node_step = as_bool(*v, "nna_per_node_step");
  if (const json* v = f.opt("attack")) e.attack = parse_attack(*v, e.clique_worlds);
  e.task = parse_task(f.get("task"));
  if (const json* v = f.opt("rho")) e.rho = as_number(*v, "rho");
  if (const json* v = f.opt("beta")) e.beta = as_number(*v, "beta");
  e.rounds = as_size(f.get("rounds"), "rounds");
  if (const json* v = f.opt("comm_rounds_per_step")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "auto") config_error("comm_rounds_per_step", "expected \"auto\" or an integer");
      e.comm_rounds_per_step.automatic = true;
    } else {
      e.comm_rounds_per_step.value = as_size(*v, "comm_rounds_per_step");
    }
  }
  e.seed = as_u64(f.get("seed"), "seed");
  if (const json* v = f.opt("monitor")) e.monitor = monitor_from_string(as_string(*v, "monitor"));
  if (const json* v = f.opt("sweep")) {
    Fields s(*v, "sweep");
    if (const json* a = s.opt("b"))
      e.sweep.b = as_list<std::size_t>(*a, "sweep.b", [](const json& x, const std::string& w) { return as_size(x, w); });
    if (const json* a = s.opt("attack"))
      e.sweep.attack = as_list<AttackKind>(*a, "sweep.attack", [](const json& x, const std::string& w) {
        return attack_from_string(as_string(x, w));
      });
    if (const json* a = s.opt("rule"))
      e.sweep.rule = as_list<Rule>(*a, "sweep.rule", [](const json& x, const std::string& w) {
        return rule_from_string(as_string(x, w));
      });
    if (const json* a = s.opt("seed"))
      e.sweep.seed = as_list<std::uint64_t>(*a, "sweep.seed", [](const json& x, const std::string& w) { return as_u64(x, w); });
    s.finish();
  }
  if (const json* v = f.opt("output")) {
    Fields o(*v, "output");
    if (const json* d = o.opt("dir")) e.out_dir = as_string(*d, "output.dir");
    if (const json* p = o.opt("prefix")) e.prefix = as_string(*p, "output.prefix");
    o.finish();
  }
  f.finish();
  if (e.prefix.empty()) e.prefix = e.name;
  if (e.clique_worlds && e.topology.generator != "three_clique_ghb" && e.topology.generator != "two_clique_bridge")
    config_error("attack.worlds", "\"cliques\" needs a two-clique or three-clique generator");
  return e;
}

ExperimentFile load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    fail(ErrorKind::Config, path + ": " + err.what());
  }
  const fs::path parent = fs::path(path).parent_path();
  return parse_experiment(doc, parent.empty() ? "." : parent.string());
}

std::vector<ExpandedRun> expand(const ExperimentFile& exp) {
  const std::vector<std::size_t> bs = exp.sweep.b.empty() ? std::vector<std::size_t>{exp.b} : exp.sweep.b;
  const std::vector<AttackKind> attacks =
      exp.sweep.attack.empty() ? std::vector<AttackKind>{exp.attack.kind} : exp.sweep.attack;
  const std::vector<Rule> rules = exp.sweep.rule.empty() ? std::vector<Rule>{exp.rule} : exp.sweep.rule;
  const std::vector<std::uint64_t> seeds = exp.sweep.seed.empty() ? std::vector<std::uint64_t>{exp.seed} : exp.sweep.seed;

  std::vector<ExpandedRun> out;
  for (std::size_t b : bs) {
    auto net = std::make_shared<const Network>(Network::build(build_topology(exp.topology, b)));
    for (AttackKind attack : attacks) {
      for (Rule rule : rules) {
        for (std::uint64_t seed : seeds) {
          ExpandedRun r;
          r.index = out.size();
          r.stem = exp.prefix + "-" + format_index(r.index);
          RunConfig& c = r.config;
          c.name = r.stem;
          c.network = net;
          c.rule = rule;
          c.b = b;
          c.eta = exp.eta.value_or(0.0);
          c.allow_large_eta = exp.allow_large_eta;
          c.nna_per_node_step = exp.nna_per_node_step;
          c.attack = exp.attack;
          c.attack.kind = attack;
          if (exp.clique_worlds) c.attack.worlds = ghb_worlds(static_cast<std::size_t>(exp.topology.args.at(0)));
          c.task = exp.task;
          c.rho = exp.rho;
          c.beta = exp.beta;
          c.rounds = exp.rounds;
          c.comm_rounds_per_step = exp.comm_rounds_per_step;
          c.seed = seed;
          c.monitor = exp.monitor;
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

SweepReport run_experiment(const ExperimentFile& exp_in, const SweepOptions& opts) {
  ExperimentFile exp = exp_in;
  if (opts.seed_override) {
    exp.seed = *opts.seed_override;
    exp.sweep.seed.clear();
  }
  if (opts.no_monitor) exp.monitor = MonitorMode::Off;
  std::vector<ExpandedRun> runs = expand(exp);

  std::vector<Simulation> sims;
  sims.reserve(runs.size());
  for (const ExpandedRun& r : runs) sims.push_back(Simulation::prepare(r.config));

  const fs::path dir = opts.out_dir.empty() ? fs::path(exp.out_dir.empty() ? "." : exp.out_dir) : fs::path(opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Config, "cannot create output directory '" + dir.string() + "'");

  SweepReport report;
  report.runs.resize(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      RunOutcome& o = report.runs[k];
      o.index = runs[k].index;
      o.stem = runs[k].stem;
      o.config = runs[k].config;
      try {
        const RunTrace trace = sims[k].run();
        const json header = trace_header_json(trace);
        std::ofstream csv(dir / (o.stem + ".csv"), std::ios::binary);
        write_trace_csv(csv, trace);
        std::ofstream js(dir / (o.stem + ".json"), std::ios::binary);
        js << header.dump(2) << '\n';
        if (!csv || !js) fail(ErrorKind::Config, "cannot write outputs for " + o.stem);
        o.rows = trace.rows.size();
        o.monitor_violations = trace.monitor_violations;
        o.error_violations = trace.error_violations;
        o.chain_violations = header["chain_check"]["violations"]["total"].get<std::size_t>();
        o.final_var_h = trace.rows.back().var_h;
        o.final_bias_drift = trace.rows.back().bias_drift;
        o.final_grad_norm_sq = trace.rows.back().grad_norm_sq;
        const bool clean = exp.monitor == MonitorMode::Off || (o.monitor_violations == 0 && o.error_violations == 0 && o.chain_violations == 0);
        o.status = clean ? "ok" : "violations";
      } catch (const std::exception& e) {
        o.status = "error";
        o.message = e.what();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, runs.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::ofstream summary(dir / (exp.prefix + "-summary.csv"), std::ios::binary);
  summary << "index,stem,rule,b,attack,seed,status,rows,monitor_violations,error_violations,chain_violations,final_var_h,"
             "final_bias_drift,final_grad_norm_sq,message\n";
  for (const RunOutcome& o : report.runs) {
    char nums[128];
    std::snprintf(nums, sizeof nums, "%.17g,%.17g,%.17g", o.final_var_h, o.final_bias_drift, o.final_grad_norm_sq);
    std::string msg = o.message;
    for (char& c : msg)
      if (c == ',' || c == '\n') c = ';';
    summary << o.index << ',' << o.stem << ',' << to_string(o.config.rule) << ',' << o.config.b << ','
            << to_string(o.config.attack.kind) << ',' << o.config.seed << ',' << o.status << ',' << o.rows << ','
            << o.monitor_violations << ',' << o.error_violations << ',' << o.chain_violations << ',' << nums << ',' << msg << '\n';
    if (o.status != "ok") report.exit_code = 1;
  }
  return report;
}

}  // namespace byzgossip
