#include "byzgossip/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include <unistd.h>

#include "byzgossip/adversary.hpp"
#include "byzgossip/engine.hpp"
#include "byzgossip/error.hpp"
#include "byzgossip/experiment.hpp"
#include "byzgossip/metrics.hpp"
#include "byzgossip/rng.hpp"
#include "byzgossip/trace_io.hpp"

#ifndef BYZGOSSIP_CONFIG_DIR
#define BYZGOSSIP_CONFIG_DIR "configs"
#endif

namespace byzgossip {

namespace fs = std::filesystem;

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"spectra", "contraction", "error-bounds", "breakdown", "dsgd"};
  return names;
}

std::vector<int> suite_criteria(std::string_view suite) {
  if (suite == "spectra") return {1, 2, 3};
  if (suite == "contraction") return {4, 6, 7, 10};
  if (suite == "error-bounds") return {5, 6};
  if (suite == "breakdown") return {8};
  if (suite == "dsgd") return {9, 11, 12};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  fail(ErrorKind::Config, "unknown suite '" + std::string(suite) + "'");
}

nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id},         {"title", r.title},     {"passed", r.passed},
          {"detail", r.detail}, {"metrics", r.metrics}, {"seconds", r.seconds}};
}

Verifier::Verifier(VerifyOptions opts) : opts_(std::move(opts)) {
  if (opts_.config_dir.empty()) opts_.config_dir = BYZGOSSIP_CONFIG_DIR;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::shared_ptr<const Network> share(Topology t) { return std::make_shared<const Network>(Network::build(std::move(t))); }

// ---------------------------------------------------------------- spectra

CriterionResult breakdown_spectrum() {
  CriterionResult r{1, "breakdown-topology spectrum: mu2(G_H) = 2b", true, "", {}, 0};
  double worst = 0.0;
  for (std::size_t m = 3; m <= 8; ++m)
    for (std::size_t b = 1; b <= m; ++b) {
      const Network net = Network::build(three_clique_ghb(m, b));
      const double err = std::abs(net.honest_spectrum.mu2 - 2.0 * static_cast<double>(b));
      worst = std::max(worst, err);
      if (err > 1e-8) {
        r.passed = false;
        r.detail += "(m=" + std::to_string(m) + ",b=" + std::to_string(b) + ") mu2=" + fmt(net.honest_spectrum.mu2) + " ";
      }
    }
  r.metrics["max_abs_error"] = worst;
  if (r.passed) r.detail = "33 (m,b) pairs, max |mu2 - 2b| = " + fmt(worst);
  return r;
}

std::vector<double> circulant_prediction(std::size_t m, std::size_t b) {
  std::vector<double> out = {0.0, 2.0 * static_cast<double>(b)};
  const double pi = std::acos(-1.0);
  for (std::size_t p = 1; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (std::size_t q = 0; q < b; ++q) s += std::polar(1.0, 2.0 * pi * static_cast<double>(p * q) / static_cast<double>(m));
    const double c = static_cast<double>(b + m);
    out.push_back(c + std::abs(s));
    out.push_back(c - std::abs(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

CriterionResult circulant_spectrum() {
  CriterionResult r{2, "circulant spectrum of two_clique_bridge(m,b)", true, "", {}, 0};
  double worst = 0.0;
  for (std::size_t m = 3; m <= 8; ++m)
    for (std::size_t b = 1; b <= m; ++b) {
      const SpectralInfo s = spectral_info(laplacian(two_clique_bridge(m, b)));
      const std::vector<double> want = circulant_prediction(m, b);
      for (std::size_t k = 0; k < want.size(); ++k) {
        const double err = std::abs(s.eigenvalues[static_cast<Eigen::Index>(k)] - want[k]);
        worst = std::max(worst, err);
        if (err > 1e-8) r.passed = false;
      }
      if (!r.passed && r.detail.empty()) r.detail = "first mismatch at m=" + std::to_string(m) + ", b=" + std::to_string(b);
    }
  r.metrics["max_abs_error"] = worst;
  if (r.passed) r.detail = "33 (m,b) pairs, max eigenvalue error " + fmt(worst);
  return r;
}

CriterionResult two_k13_spectrum() {
  CriterionResult r{3, "two K13 cliques with 8 circular cross-links: mu2 = 16", false, "", {}, 0};
  const SpectralInfo s = spectral_info(laplacian(two_clique_bridge(13, 8)));
  r.passed = std::abs(s.mu2 - 16.0) <= 1e-8;
  r.metrics = {{"mu2", s.mu2}, {"mu_max", s.mu_max}, {"gamma", s.gamma}};
  r.detail = "mu2 = " + fmt(s.mu2) + ", mu_max = " + fmt(s.mu_max);
  return r;
}

// ---------------------------------------------------------------- property suites

struct Trial {
  Network net;
  ParamMatrix x;
  std::size_t b = 0;
  double eta = 0.0;
  bool centered = true;
  bool per_target = false;
};

Topology honest_graph(std::mt19937_64& rng, std::size_t n, double p, double mu_min) {
  for (int k = 0;; ++k) {
    GammaGraphParams gp;
    gp.n_honest = n;
    gp.edge_prob = std::min(1.0, p + 0.05 * k);
    gp.mu_min = mu_min;
    const GammaSample s = sample_gamma_graph(gp, rng());
    if (s.topology) return *s.topology;
  }
}

Trial draw_trial(std::uint64_t root, std::size_t k, bool nna) {
  std::mt19937_64 rng = make_stream(root, StreamPurpose::Trial, nna ? 1 : 0, k);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Trial tr;
  tr.b = nna ? 1 + rng() % 2 : 1 + rng() % 3;
  const double budget = nna ? 8.0 * static_cast<double>(tr.b) : 2.0 * static_cast<double>(tr.b + 1);
  const std::size_t lo = std::max<std::size_t>(static_cast<std::size_t>(budget) + 2, 6);
  const std::size_t n = lo + rng() % (41 - lo);
  const Topology h = honest_graph(rng, n, 0.35 + 0.65 * unit(rng), budget);

  std::vector<Edge> edges(h.edges().begin(), h.edges().end());
  const std::size_t n_byz = 1 + rng() % (2 * tr.b + 1);
  std::vector<NodeId> byz;
  for (std::size_t j = 0; j < n_byz; ++j) byz.push_back(n + j);
  for (NodeId i = 0; i < n; ++i) {
    std::size_t want = unit(rng) < 0.7 ? tr.b : rng() % (tr.b + 1);
    want = std::min(want, n_byz);
    std::vector<NodeId> pool = byz;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t q = 0; q < want; ++q) edges.emplace_back(i, pool[q]);
  }
  tr.net = Network::build(Topology(n + n_byz, std::move(edges), byz));

  const std::size_t d = 1 + rng() % 8;
  std::normal_distribution<double> g(0.0, 1.0);
  const double scale = std::exp(4.0 * unit(rng) - 2.0);
  tr.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < tr.x.rows(); ++i)
    for (Eigen::Index c = 0; c < tr.x.cols(); ++c) tr.x(i, c) = scale * g(rng);
  if (unit(rng) < 0.3) {
    // clustered start along the Fiedler cut, the regime the spectral attack targets
    const Eigen::VectorXd& f = tr.net.honest_spectrum.fiedler;
    for (Eigen::Index i = 0; i < tr.x.rows(); ++i) tr.x.row(i).array() += 3.0 * scale * (f[i] >= 0 ? 1.0 : -1.0);
  }
  const double u = unit(rng) < 0.3 ? 1.0 : 0.2 + 0.8 * unit(rng);
  tr.eta = u / tr.net.full_spectrum.mu_max;
  tr.centered = unit(rng) < 0.8;
  tr.per_target = unit(rng) < 0.1;
  return tr;
}

Verifier::PropertyStats run_property(std::uint64_t root, std::size_t trials, bool nna) {
  Verifier::PropertyStats st;
  const AttackKind kinds[] = {AttackKind::ALIE, AttackKind::FOE, AttackKind::Dissensus,
                              AttackKind::SpectralHeterogeneity, AttackKind::TwoWorld};
  for (std::size_t k = 0; k < trials; ++k) {
    const Trial tr = draw_trial(root, k, nna);
    const Topology& t = tr.net.topology;
    const RuleConfig rule = make_rule_config(nna ? Rule::NNA : Rule::CGPlus, tr.b, tr.eta, t);
    const BoundSet bounds = bounds_for(rule.rule, tr.net.honest_spectrum, tr.b, tr.eta);
    if (!bounds.feasible) fail(ErrorKind::CheckFailure, "trial generator produced an infeasible bound set");
    const OmniscientView view = make_view(tr.net, tr.x);
    const double var = var_h(tr.x);
    const Eigen::RowVectorXd mean = tr.x.colwise().mean();

    double best = -1.0;
    std::string best_name;
    for (AttackKind kind : kinds) {
      AttackSpec spec;
      spec.kind = kind;
      spec.centered_on_target = tr.centered;
      spec.per_target_search = tr.per_target;
      const ForgedRound fr = forge_round(view, spec, rule);
      const ParamMatrix y = aggregate_round(t, tr.x, assemble_inbox(t, tr.x, fr.messages), rule);
      const double damage = mse_damage(tr.x, y);
      if (damage > best) {
        best = damage;
        best_name = std::string(to_string(kind));
      }
      // every candidate is checked, the damage-maximizing one included
      const double spread = spread_around(y, mean);
      const double shift = mean_shift_sq(tr.x, y);
      const ErrorTermReport err = extract_error_term(tr.x, y, tr.eta, tr.net.w_honest, tr.b);
      const double ebound = bounds.error_factor * err.pairwise_energy;
      st.alpha_violations += spread > bounds.alpha_bound * var + kBoundSlack;
      st.lambda_violations += shift > bounds.lambda_bound * var + kBoundSlack;
      st.error_violations += err.norm_sq > ebound + kBoundSlack;
      if (var > 0) {
        st.worst_alpha_ratio = std::max(st.worst_alpha_ratio, spread / (bounds.alpha_bound * var));
        st.worst_lambda_ratio = std::max(st.worst_lambda_ratio, shift / (bounds.lambda_bound * var));
      }
      if (ebound > 0) st.worst_error_ratio = std::max(st.worst_error_ratio, err.norm_sq / ebound);
      ++st.rounds_checked;
    }
    ++st.best_attack_counts[best_name];
    ++st.trials;
  }
  return st;
}

nlohmann::json stats_json(const Verifier::PropertyStats& s) {
  return {{"trials", s.trials},
          {"rounds_checked", s.rounds_checked},
          {"alpha_violations", s.alpha_violations},
          {"lambda_violations", s.lambda_violations},
          {"error_violations", s.error_violations},
          {"worst_alpha_ratio", s.worst_alpha_ratio},
          {"worst_lambda_ratio", s.worst_lambda_ratio},
          {"worst_error_ratio", s.worst_error_ratio},
          {"best_attack_counts", s.best_attack_counts}};
}

std::string attack_tally(const Verifier::PropertyStats& s) {
  std::string out;
  for (const auto& [name, count] : s.best_attack_counts) out += (out.empty() ? "" : " ") + name + ":" + std::to_string(count);
  return out;
}

// ---------------------------------------------------------------- plain gossip rate

CriterionResult plain_gossip_rate(std::uint64_t root) {
  CriterionResult r{7, "plain gossip linear rate on honest-only graphs", true, "", {}, 0};
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    std::mt19937_64 rng = make_stream(root, StreamPurpose::Trial, 7, k);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = 5 + rng() % 36;
    RunConfig cfg;
    cfg.name = "gossip-" + std::to_string(k);
    cfg.network = share(honest_graph(rng, n, 0.1 + 0.5 * unit(rng), 1e-6));
    cfg.rule = Rule::PlainGossip;
    cfg.eta = (unit(rng) < 0.5 ? 1.0 : 0.3 + 0.7 * unit(rng)) / cfg.network->full_spectrum.mu_max;
    cfg.task.kind = TaskKind::MeanEstimation;
    cfg.task.dim = 1 + rng() % 8;
    cfg.task.spread = std::exp(4.0 * unit(rng) - 2.0);
    cfg.rounds = 100;
    cfg.seed = rng();
    const RunTrace trace = mean_estimation_run(cfg);
    const double rate = 1.0 - cfg.eta * cfg.network->full_spectrum.mu2;
    const double h = static_cast<double>(cfg.network->topology.honest_count());
    const double e0 = h * trace.rows[0].mse_to_initial_mean;
    for (const RoundRecord& rec : trace.rows) {
      const double lhs = h * rec.mse_to_initial_mean;
      const double rhs = std::pow(rate, static_cast<double>(rec.round)) * e0;
      ++checks;
      if (lhs > rhs + kBoundSlack) ++violations;
      if (rhs > 0) worst = std::max(worst, lhs / rhs);
    }
  }
  r.passed = violations == 0;
  r.metrics = {{"graphs", 50}, {"checks", checks}, {"violations", violations}, {"worst_ratio", worst}};
  r.detail = std::to_string(checks) + " (graph, t) checks, " + std::to_string(violations) +
             " violations, worst lhs/rhs " + fmt(worst);
  return r;
}

// ---------------------------------------------------------------- breakdown

CriterionResult breakdown_demo() {
  CriterionResult r{8, "TwoWorld freezes CG+ and NNA on three_clique_ghb", true, "", {}, 0};
  double worst_move = 0.0;
  double worst_alpha = 0.0;
  std::size_t runs = 0;
  for (std::size_t m = 3; m <= 6; ++m)
    for (std::size_t b = 1; b <= m; ++b)
      for (Rule rule : {Rule::CGPlus, Rule::NNA}) {
        RunConfig cfg;
        cfg.name = "two-world";
        cfg.network = share(three_clique_ghb(m, b));
        cfg.rule = rule;
        cfg.b = b;
        cfg.attack.kind = AttackKind::TwoWorld;
        cfg.attack.worlds = ghb_worlds(m);
        cfg.task.kind = TaskKind::MeanEstimation;
        cfg.task.dim = 2;
        Eigen::MatrixXd y(static_cast<Eigen::Index>(2 * m), 2);
        for (Eigen::Index i = 0; i < y.rows(); ++i) y.row(i) = i < static_cast<Eigen::Index>(m) ? Eigen::RowVector2d(-1.0, 0.5)
                                                                                                 : Eigen::RowVector2d(3.0, -2.0);
        cfg.task.targets = y;
        cfg.rounds = 50;
        const RunTrace trace = mean_estimation_run(cfg);
        const double move = (trace.final_x - y).cwiseAbs().maxCoeff();
        const double alpha = alpha_measured(y, trace.final_x);
        worst_move = std::max(worst_move, move);
        worst_alpha = std::max(worst_alpha, std::abs(alpha - 1.0));
        for (const RoundRecord& rec : trace.rows)
          if (rec.round > 0) worst_alpha = std::max(worst_alpha, std::abs(rec.step_spread / rec.step_prev_var - 1.0));
        if (move > 1e-12 || std::abs(alpha - 1.0) > 1e-12) r.passed = false;
        ++runs;
      }
  r.metrics = {{"runs", runs}, {"max_parameter_change", worst_move}, {"max_abs_alpha_minus_one", worst_alpha}};
  r.detail = std::to_string(runs) + " runs of 50 rounds, max |x - x0| = " + fmt(worst_move) + ", max |alpha - 1| = " +
             fmt(worst_alpha);
  if (worst_alpha > 1e-12) r.passed = false;
  return r;
}

// ---------------------------------------------------------------- D-SGD gap

struct GapSetup {
  static constexpr std::size_t m = 13;
  static constexpr std::size_t k = 8;
  static constexpr std::size_t b = 6;
  static constexpr std::size_t rounds = 150;
  static constexpr double rho = 0.02;
};

RunConfig gap_config(Rule rule) {
  RunConfig cfg;
  cfg.name = std::string("gap-") + std::string(to_string(rule));
  cfg.network = share(attach_byzantine(two_clique_bridge(GapSetup::m, GapSetup::k), GapSetup::b, GapSetup::b));
  cfg.rule = rule;
  cfg.b = GapSetup::b;
  cfg.attack.kind = AttackKind::SpectralHeterogeneity;
  cfg.task.kind = TaskKind::QuadraticSum;
  cfg.task.dim = 4;
  cfg.task.spread = 0.0;
  cfg.task.init = 1.0;
  cfg.task.init_jitter = 1.0;
  cfg.rho = GapSetup::rho;
  cfg.beta = 0.9;
  cfg.rounds = GapSetup::rounds;
  cfg.seed = 9;
  return cfg;
}

CriterionResult dsgd_gap() {
  CriterionResult r{9, "CG+ vs NNA under the spectral attack with 2(b+1) < mu2 < 8b", false, "", {}, 0};
  const RunTrace cg = dsgd_run(gap_config(Rule::CGPlus));
  const RunTrace nna = dsgd_run(gap_config(Rule::NNA));
  const double v0 = cg.rows.front().var_h;
  const double cg_final = cg.rows.back().var_h;
  const double nna_final = nna.rows.back().var_h;
  const double mu2 = cg.header.honest_spectrum.mu2;
  const bool regime = 2.0 * (GapSetup::b + 1) < mu2 && mu2 < 8.0 * GapSetup::b;
  // pinned thresholds: CG+ below 10% of the initial variance, NNA at least 5x above CG+
  r.passed = regime && cg_final < 0.1 * v0 && nna_final >= 5.0 * cg_final;
  r.metrics = {{"mu2", mu2},
               {"initial_var", v0},
               {"cgplus_final_var", cg_final},
               {"nna_final_var", nna_final},
               {"ratio", nna_final / cg_final},
               {"cgplus_monitor_violations", cg.monitor_violations}};
  r.detail = "Var0 = " + fmt(v0) + ", CG+ final = " + fmt(cg_final) + " (" + fmt(cg_final / v0) +
             " of initial), NNA final = " + fmt(nna_final) + " (" + fmt(nna_final / cg_final) + "x CG+)";
  if (cg.monitor_violations > 0) {
    r.passed = false;
    r.detail += ", CG+ monitor violations " + std::to_string(cg.monitor_violations);
  }
  return r;
}

// ---------------------------------------------------------------- multi-round chaining

CriterionResult chained_bounds(std::uint64_t root) {
  CriterionResult r{10, "chained variance, cumulative bias and asymptotic bias for CG+", true, "", {}, 0};
  std::vector<std::pair<std::string, std::shared_ptr<const Network>>> graphs;
  graphs.emplace_back("two_clique_bridge(13,8)+6", share(attach_byzantine(two_clique_bridge(13, 8), 6, 6)));
  for (std::size_t k = 0; k < 3; ++k) {
    std::mt19937_64 rng = make_stream(root, StreamPurpose::Trial, 10, k);
    const Topology h = honest_graph(rng, 24, 0.6, 8.0);
    graphs.emplace_back("random-" + std::to_string(k), share(attach_byzantine(h, 4, 3)));
  }
  const std::size_t bs[] = {6, 3, 3, 3};
  const AttackKind kinds[] = {AttackKind::None, AttackKind::ALIE, AttackKind::FOE, AttackKind::Dissensus,
                              AttackKind::SpectralHeterogeneity, AttackKind::TwoWorld};
  std::size_t runs = 0;
  std::size_t total = 0;
  std::size_t error_hits = 0;
  double worst_tail = 0.0;
  nlohmann::json per_run = nlohmann::json::array();
  for (std::size_t g = 0; g < graphs.size(); ++g)
    for (AttackKind kind : kinds) {
      RunConfig cfg;
      cfg.name = graphs[g].first + "/" + std::string(to_string(kind));
      cfg.network = graphs[g].second;
      cfg.rule = Rule::CGPlus;
      cfg.b = bs[g];
      cfg.attack.kind = kind;
      cfg.task.kind = TaskKind::MeanEstimation;
      cfg.task.dim = 3;
      cfg.rounds = 200;
      cfg.seed = 100 + g;
      const RunTrace trace = mean_estimation_run(cfg);
      const ViolationReport rep = check_run(trace);
      if (rep.skipped) {
        r.passed = false;
        r.detail = cfg.name + ": preconditions unexpectedly fail";
        continue;
      }
      const double asym = trace.header.bounds.asymptotic_bias_bound(trace.rows.front().var_h);
      const double tail = trace.rows.back().bias_drift * trace.rows.back().bias_drift;
      worst_tail = std::max(worst_tail, tail / asym);
      total += rep.total() + trace.monitor_violations;
      error_hits += trace.error_violations;
      if (rep.total() + trace.monitor_violations > 0 || tail > asym) r.passed = false;
      per_run.push_back({{"run", cfg.name},
                         {"violations", rep.total() + trace.monitor_violations},
                         {"error_term_hits", trace.error_violations},
                         {"final_bias_sq", tail},
                         {"asymptotic_bound", asym}});
      ++runs;
    }
  r.metrics = {{"runs", runs},
               {"violations", total},
               {"error_term_hits", error_hits},
               {"worst_tail_bias_over_bound", worst_tail},
               {"per_run", per_run}};
  if (r.detail.empty())
    r.detail = std::to_string(runs) + " runs x 200 rounds, " + std::to_string(total) +
               " violations, max final bias^2 / asymptotic bound " + fmt(worst_tail) + "; error-term monitor hits " +
               std::to_string(error_hits) + " (reported, not part of this criterion)";
  return r;
}

// ---------------------------------------------------------------- D-SGD property

RunConfig sgd_config(std::size_t rounds, CommRounds comm, std::uint64_t seed) {
  RunConfig cfg;
  cfg.name = "sgd-" + std::to_string(rounds);
  cfg.network = share(attach_byzantine(two_clique_bridge(13, 8), 6, 6));
  cfg.rule = Rule::CGPlus;
  cfg.b = 6;
  cfg.task.kind = TaskKind::QuadraticSum;
  cfg.task.dim = 4;
  cfg.task.spread = 0.0;
  cfg.task.center = 0.0;
  cfg.task.noise_sigma = 1.0;
  cfg.task.init = 3.0;
  cfg.task.init_jitter = 0.5;
  cfg.rho = 1.0 / std::sqrt(static_cast<double>(rounds));
  cfg.beta = 0.9;
  cfg.rounds = rounds;
  cfg.comm_rounds_per_step = comm;
  cfg.seed = seed;
  return cfg;
}

constexpr std::size_t kSgdSeeds = 20;

// Mean over seeds of the last half of the |grad f_H|^2 curve.
double trailing_gradient(std::size_t rounds) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < kSgdSeeds; ++s) {
    const RunTrace trace = dsgd_run(sgd_config(rounds, {}, 1000 + s));
    const std::size_t n = trace.rows.size();
    const std::size_t w = (n - 1) / 2;
    double part = 0.0;
    for (std::size_t k = n - w; k < n; ++k) part += trace.rows[k].grad_norm_sq;
    total += part / static_cast<double>(w);
  }
  return total / static_cast<double>(kSgdSeeds);
}

CriterionResult dsgd_property() {
  CriterionResult r{11, "momentum D-SGD with CG+: gradient norm falls with T, auto rounds tighten consensus", false, "",
                    {}, 0};
  const double g_short = trailing_gradient(200);
  const double g_long = trailing_gradient(2000);
  const RunTrace one_run = dsgd_run(sgd_config(200, {}, 1000));
  const RunTrace auto_run = dsgd_run(sgd_config(200, CommRounds{true, 1}, 1000));
  const double var_one = one_run.rows.back().var_h;
  const double var_auto = auto_run.rows.back().var_h;
  r.passed = g_long * 2.0 <= g_short && var_auto < var_one;
  r.metrics = {{"seeds", kSgdSeeds},
               {"grad_window_T200", g_short},
               {"grad_window_T2000", g_long},
               {"improvement", g_short / g_long},
               {"auto_comm_rounds", auto_run.header.comm_rounds_per_step},
               {"final_var_one_round", var_one},
               {"final_var_auto", var_auto}};
  r.detail = "trailing-half mean |grad|^2 over " + std::to_string(kSgdSeeds) + " seeds: T=200 " + fmt(g_short) +
             ", T=2000 " + fmt(g_long) + " (" + fmt(g_short / g_long) + "x); final Var with 1 round " + fmt(var_one) +
             ", with " + std::to_string(auto_run.header.comm_rounds_per_step) + " rounds " + fmt(var_auto);
  return r;
}

// ---------------------------------------------------------------- determinism

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out[e.path().filename().string()] = os.str();
  }
  return out;
}

CriterionResult determinism(const std::string& config_dir) {
  CriterionResult r{12, "fixture configs re-run to byte-identical traces", true, "", {}, 0};
  std::vector<fs::path> configs;
  if (fs::is_directory(config_dir))
    for (const auto& e : fs::directory_iterator(config_dir))
      if (e.path().extension() == ".json") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    r.passed = false;
    r.detail = "no fixture configs found in " + config_dir;
    return r;
  }
  const fs::path scratch = fs::temp_directory_path() / ("byzgossip-determinism-" + std::to_string(::getpid()));
  std::size_t files = 0;
  nlohmann::json hashes;
  for (const fs::path& c : configs) {
    const ExperimentFile exp = load_experiment(c.string());
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = scratch / (c.stem().string() + "-" + std::to_string(rep));
      fs::remove_all(out);
      SweepOptions opts;
      opts.out_dir = out.string();
      opts.jobs = rep == 0 ? 1 : 2;
      run_experiment(exp, opts);
      auto got = read_dir(out);
      if (rep == 0) {
        first = std::move(got);
      } else if (got != first) {
        r.passed = false;
        r.detail += c.filename().string() + " differs between runs; ";
      }
    }
    for (const auto& [name, bytes] : first)
      if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
        hashes[name] = fnv1a_hex(bytes);
        ++files;
      }
  }
  fs::remove_all(scratch);
  r.metrics = {{"configs", configs.size()}, {"csv_files", files}, {"fnv1a", hashes}};
  if (r.passed)
    r.detail = std::to_string(configs.size()) + " configs, " + std::to_string(files) +
               " CSV files identical across serial and 2-worker re-runs";
  return r;
}

}  // namespace

const Verifier::PropertyStats& Verifier::property_suite(bool nna) {
  std::optional<PropertyStats>& slot = nna ? nna_ : cg_;
  if (!slot) slot = run_property(opts_.seed, opts_.trials, nna);
  return *slot;
}

CriterionResult Verifier::run(int id) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = breakdown_spectrum(); break;
    case 2: r = circulant_spectrum(); break;
    case 3: r = two_k13_spectrum(); break;
    case 4:
    case 5: {
      const bool nna = id == 5;
      const PropertyStats& s = property_suite(nna);
      r.id = id;
      r.title = nna ? "NNA one-step bounds with 8b constants, randomized suite"
                    : "CG+ one-step variance and bias bounds, randomized suite";
      r.passed = s.alpha_violations == 0 && s.lambda_violations == 0;
      r.metrics = stats_json(s);
      r.detail = std::to_string(s.trials) + " trials, " + std::to_string(s.rounds_checked) + " rounds, violations " +
                 std::to_string(s.alpha_violations) + "/" + std::to_string(s.lambda_violations) +
                 ", worst ratios " + fmt(s.worst_alpha_ratio) + "/" + fmt(s.worst_lambda_ratio) + ", best attacks " +
                 attack_tally(s);
      break;
    }
    case 6: {
      const PropertyStats& cg = property_suite(false);
      const PropertyStats& nn = property_suite(true);
      r.id = 6;
      r.title = "error-term lemmas: ||E||^2 <= 2(b+1)||X||_W^2 (CG+), 8b||X||_W^2 (NNA)";
      r.passed = cg.error_violations == 0 && nn.error_violations == 0;
      r.metrics = {{"cgplus_violations", cg.error_violations},
                   {"nna_violations", nn.error_violations},
                   {"cgplus_worst_ratio", cg.worst_error_ratio},
                   {"nna_worst_ratio", nn.worst_error_ratio}};
      r.detail = std::to_string(cg.rounds_checked + nn.rounds_checked) + " rounds, violations " +
                 std::to_string(cg.error_violations) + "/" + std::to_string(nn.error_violations) +
                 ", worst ||E||^2/bound " + fmt(cg.worst_error_ratio) + "/" + fmt(nn.worst_error_ratio);
      break;
    }
    case 7: r = plain_gossip_rate(opts_.seed); break;
    case 8: r = breakdown_demo(); break;
    case 9: r = dsgd_gap(); break;
    case 10: r = chained_bounds(opts_.seed); break;
    case 11: r = dsgd_property(); break;
    case 12: r = determinism(opts_.config_dir); break;
    default: fail(ErrorKind::Config, "no criterion " + std::to_string(id));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> Verifier::run_suite(std::string_view suite) {
  std::vector<CriterionResult> out;
  for (int id : suite_criteria(suite)) out.push_back(run(id));
  return out;
}

}  // namespace byzgossip
