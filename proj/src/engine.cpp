#include "byzgossip/engine.hpp"

#include <cmath>
#include <limits>

#include "byzgossip/error.hpp"
#include "byzgossip/rng.hpp"

namespace byzgossip {

std::string_view to_string(TaskKind k) noexcept {
  switch (k) {
    case TaskKind::MeanEstimation: return "MeanEstimation";
    case TaskKind::QuadraticSum: return "QuadraticSum";
    case TaskKind::LogisticSynthetic: return "LogisticSynthetic";
  }
  return "?";
}

TaskKind task_from_string(std::string_view s) {
  for (TaskKind k : {TaskKind::MeanEstimation, TaskKind::QuadraticSum, TaskKind::LogisticSynthetic})
    if (s == to_string(k)) return k;
  fail(ErrorKind::Config, "unknown task '" + std::string(s) + "'");
}

std::string_view to_string(MonitorMode m) noexcept {
  switch (m) {
    case MonitorMode::Off: return "off";
    case MonitorMode::Record: return "record";
    case MonitorMode::Abort: return "abort";
  }
  return "?";
}

MonitorMode monitor_from_string(std::string_view s) {
  for (MonitorMode m : {MonitorMode::Off, MonitorMode::Record, MonitorMode::Abort})
    if (s == to_string(m)) return m;
  fail(ErrorKind::Config, "unknown monitor mode '" + std::string(s) + "'");
}

namespace {

Eigen::VectorXd gaussian(std::mt19937_64& rng, std::size_t d, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = scale * n(rng);
  return v;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double heterogeneity_at(const Task& task, const Eigen::VectorXd& x) {
  const std::size_t h = task.kind == TaskKind::LogisticSynthetic ? task.features.size()
                                                                 : static_cast<std::size_t>(task.targets.rows());
  const Eigen::VectorXd g = global_gradient(task, x);
  double s = 0.0;
  for (std::size_t i = 0; i < h; ++i) s += (exact_gradient(task, i, x) - g).squaredNorm();
  return s / static_cast<double>(h);
}

}  // namespace

Task make_task(const TaskSpec& spec, std::size_t honest_count, std::uint64_t seed) {
  if (spec.dim == 0) fail(ErrorKind::Config, "task dimension must be positive");
  if (honest_count == 0) fail(ErrorKind::Config, "task needs at least one honest node");
  if (!(spec.noise_sigma >= 0.0)) fail(ErrorKind::Config, "noise_sigma must be non-negative");
  Task task;
  task.kind = spec.kind;
  task.dim = spec.dim;
  task.noise_sigma = spec.noise_sigma;
  std::mt19937_64 rng = make_stream(seed, StreamPurpose::TaskData);
  const auto d = static_cast<Eigen::Index>(spec.dim);

  if (spec.kind == TaskKind::LogisticSynthetic) {
    if (spec.samples_per_node == 0) fail(ErrorKind::Config, "logistic task needs samples");
    if (!(spec.l2 >= 0.0)) fail(ErrorKind::Config, "l2 must be non-negative");
    task.l2 = spec.l2;
    const Eigen::VectorXd w_true = gaussian(rng, spec.dim, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < honest_count; ++i) {
      const Eigen::VectorXd shift = gaussian(rng, spec.dim, spec.feature_shift);
      Eigen::MatrixXd a(static_cast<Eigen::Index>(spec.samples_per_node), d);
      Eigen::VectorXd y(a.rows());
      for (Eigen::Index s = 0; s < a.rows(); ++s) {
        a.row(s) = (gaussian(rng, spec.dim, 1.0) + shift).transpose();
        y[s] = u(rng) < sigmoid(a.row(s).dot(w_true)) ? 1.0 : -1.0;
      }
      // local smoothness: lambda_max(A^T A) / (4 n) + l2
      const Eigen::VectorXd ev = symmetric_eigen(a.transpose() * a).values;
      task.smoothness = std::max(task.smoothness, ev[ev.size() - 1] / (4.0 * static_cast<double>(a.rows())) + spec.l2);
      task.features.push_back(std::move(a));
      task.labels.push_back(std::move(y));
    }
    double z = heterogeneity_at(task, Eigen::VectorXd::Zero(d));
    z = std::max(z, heterogeneity_at(task, Eigen::VectorXd::Constant(d, spec.init)));
    for (int probe = 0; probe < 8; ++probe) z = std::max(z, heterogeneity_at(task, gaussian(rng, spec.dim, 2.0)));
    task.heterogeneity_sq = z;
    return task;
  }

  if (spec.targets) {
    if (static_cast<std::size_t>(spec.targets->rows()) != honest_count || spec.targets->cols() != d)
      fail(ErrorKind::Config, "explicit targets must be " + std::to_string(honest_count) + " x " +
                                  std::to_string(spec.dim));
    task.targets = *spec.targets;
  } else {
    task.targets.resize(static_cast<Eigen::Index>(honest_count), d);
    for (Eigen::Index i = 0; i < task.targets.rows(); ++i)
      task.targets.row(i) = (Eigen::VectorXd::Constant(d, spec.center) + gaussian(rng, spec.dim, spec.spread)).transpose();
  }
  task.curvature = spec.kind == TaskKind::QuadraticSum ? spec.curvature : 1.0;
  if (!(task.curvature > 0.0)) fail(ErrorKind::Config, "curvature must be positive");
  task.smoothness = task.curvature;
  task.heterogeneity_sq = task.curvature * task.curvature * var_h(task.targets);
  return task;
}

Eigen::VectorXd exact_gradient(const Task& task, std::size_t row, const Eigen::VectorXd& x) {
  if (task.kind != TaskKind::LogisticSynthetic)
    return task.curvature * (x - task.targets.row(static_cast<Eigen::Index>(row)).transpose());
  const Eigen::MatrixXd& a = task.features.at(row);
  const Eigen::VectorXd& y = task.labels.at(row);
  Eigen::VectorXd g = task.l2 * x;
  const double n = static_cast<double>(a.rows());
  for (Eigen::Index s = 0; s < a.rows(); ++s) {
    const double margin = y[s] * a.row(s).dot(x);
    g -= (y[s] * sigmoid(-margin) / n) * a.row(s).transpose();
  }
  return g;
}

Eigen::VectorXd global_gradient(const Task& task, const Eigen::VectorXd& x) {
  const std::size_t h = task.kind == TaskKind::LogisticSynthetic ? task.features.size()
                                                                 : static_cast<std::size_t>(task.targets.rows());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < h; ++i) g += exact_gradient(task, i, x);
  return g / static_cast<double>(h);
}

Eigen::VectorXd gradient_oracle(const Task& task, std::size_t row, const Eigen::VectorXd& x, std::mt19937_64& rng) {
  Eigen::VectorXd g = exact_gradient(task, row, x);
  if (task.noise_sigma > 0.0) g += gaussian(rng, static_cast<std::size_t>(x.size()), task.noise_sigma);
  return g;
}

std::size_t auto_comm_rounds(double gamma, double delta) {
  if (!(gamma > 0.0) || !(delta < 1.0))
    fail(ErrorKind::Config, "automatic communication rounds need gamma > 0 and delta < 1");
  return static_cast<std::size_t>(std::ceil(std::log(10.0) / (gamma * (1.0 - delta))));
}

Simulation Simulation::prepare(const RunConfig& cfg) {
  if (!cfg.network) fail(ErrorKind::Config, cfg.name + ": no network");
  const Network& net = *cfg.network;
  const Topology& t = net.topology;
  if (t.honest_count() == 0) fail(ErrorKind::Config, cfg.name + ": no honest nodes");
  if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) fail(ErrorKind::Config, cfg.name + ": beta must lie in [0, 1)");
  if (!(cfg.rho >= 0.0) || !std::isfinite(cfg.rho)) fail(ErrorKind::Config, cfg.name + ": rho must be non-negative");

  Simulation sim;
  sim.cfg_ = cfg;
  double eta = cfg.eta;
  if (!(eta > 0.0)) eta = net.full_spectrum.mu_max > 0.0 ? 1.0 / net.full_spectrum.mu_max : 1.0;
  try {
    sim.rule_ = make_rule_config(cfg.rule, cfg.b, eta, t, cfg.allow_large_eta);
  } catch (const Error& e) {
    fail(ErrorKind::Config, cfg.name + ": " + e.what());
  }
  sim.rule_.nna_per_node_step = cfg.nna_per_node_step;
  sim.cfg_.eta = eta;

  const AttackKind attack = cfg.attack.kind;
  if (!t.byzantine().empty()) {
    if (attack == AttackKind::SpectralHeterogeneity && !net.honest_spectrum.connected())
      fail(ErrorKind::Config, cfg.name + ": spectral attack needs a connected honest subgraph");
    if (attack == AttackKind::ALIE && t.honest_count() < 2)
      fail(ErrorKind::Config, cfg.name + ": ALIE needs at least two honest nodes");
    if (attack == AttackKind::TwoWorld && !cfg.attack.worlds.empty() && cfg.attack.worlds.size() != t.honest_count())
      fail(ErrorKind::Config, cfg.name + ": TwoWorld labels must cover every honest node");
    if (const auto* grid = std::get_if<ScalingGrid>(&cfg.attack.scaling); grid && grid->values.empty())
      fail(ErrorKind::Config, cfg.name + ": empty scaling grid");
  }

  try {
    sim.task_ = make_task(cfg.task, t.honest_count(), cfg.seed);
  } catch (const Error& e) {
    fail(ErrorKind::Config, cfg.name + ": " + e.what());
  }

  RunHeader& h = sim.header_;
  h.name = cfg.name;
  h.rule = cfg.rule;
  h.b = cfg.b;
  h.eta = eta;
  h.attack = attack;
  h.task = cfg.task.kind;
  h.dim = sim.task_.dim;
  h.rho = cfg.rho;
  h.beta = cfg.beta;
  h.rounds = cfg.rounds;
  h.seed = cfg.seed;
  h.monitor = cfg.monitor;
  h.full_spectrum = net.full_spectrum;
  h.honest_spectrum = net.honest_spectrum;
  h.bounds = bounds_for(cfg.rule, net.honest_spectrum, cfg.b, eta);
  h.membership = verify_gamma_membership(t, h.bounds.error_factor, cfg.b);
  h.preconditions = h.bounds.feasible && h.membership.member && net.honest_spectrum.connected() &&
                    !(cfg.rule == Rule::NNA && cfg.nna_per_node_step);
  h.smoothness = sim.task_.smoothness;
  h.noise_sigma = sim.task_.noise_sigma;
  h.heterogeneity_sq = sim.task_.heterogeneity_sq;

  if (!sim.task_.is_optimization()) {
    if (cfg.comm_rounds_per_step.automatic || cfg.comm_rounds_per_step.value != 1)
      fail(ErrorKind::Config, cfg.name + ": mean estimation runs use one aggregation round per row");
    h.comm_rounds_per_step = 1;
  } else if (cfg.comm_rounds_per_step.automatic) {
    try {
      h.comm_rounds_per_step = auto_comm_rounds(net.honest_spectrum.gamma, h.bounds.delta);
    } catch (const Error& e) {
      fail(ErrorKind::Config, cfg.name + ": " + e.what());
    }
  } else {
    if (cfg.comm_rounds_per_step.value == 0) fail(ErrorKind::Config, cfg.name + ": comm_rounds_per_step must be >= 1");
    h.comm_rounds_per_step = cfg.comm_rounds_per_step.value;
  }
  return sim;
}

ParamMatrix Simulation::initial_state() const {
  const Topology& t = cfg_.network->topology;
  if (!task_.is_optimization()) return task_.targets;
  const auto d = static_cast<Eigen::Index>(task_.dim);
  ParamMatrix x(static_cast<Eigen::Index>(t.honest_count()), d);
  const auto honest = t.honest();
  for (std::size_t r = 0; r < honest.size(); ++r) {
    Eigen::VectorXd row = Eigen::VectorXd::Constant(d, cfg_.task.init);
    if (cfg_.task.init_jitter > 0.0) {
      std::mt19937_64 rng = make_stream(cfg_.seed, StreamPurpose::InitialState, honest[r]);
      row += gaussian(rng, task_.dim, cfg_.task.init_jitter);
    }
    x.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return x;
}

namespace {

void fill_state(RoundRecord& rec, const ParamMatrix& x, const Eigen::RowVectorXd& mean0, const Task& task) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  rec.var_h = var_h(x);
  rec.bias_drift = (mean - mean0).norm();
  rec.mse_to_initial_mean = spread_around(x, mean0);
  double g = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) g += global_gradient(task, x.row(r).transpose()).squaredNorm();
  rec.grad_norm_sq = g / static_cast<double>(x.rows());
}

}  // namespace

RunTrace Simulation::run() const {
  const Network& net = *cfg_.network;
  const Topology& t = net.topology;
  const bool monitoring = cfg_.monitor != MonitorMode::Off && header_.preconditions;
  const bool has_error_lemma = cfg_.rule != Rule::ClippedGossipOracle;
  const BoundSet& bounds = header_.bounds;

  RunTrace trace;
  trace.header = header_;
  ParamMatrix x = initial_state();
  const Eigen::RowVectorXd mean0 = x.colwise().mean();
  ParamMatrix momentum = ParamMatrix::Zero(x.rows(), x.cols());

  RoundRecord rec0;
  fill_state(rec0, x, mean0, task_);
  trace.rows.push_back(rec0);

  const auto honest = t.honest();
  for (std::size_t step = 0; step < cfg_.rounds; ++step) {
    RoundRecord rec;
    rec.round = step + 1;
    if (task_.is_optimization()) {
      for (std::size_t r = 0; r < honest.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        std::mt19937_64 rng = make_stream(cfg_.seed, StreamPurpose::GradientNoise, honest[r], step);
        const Eigen::VectorXd g = gradient_oracle(task_, r, x.row(row).transpose(), rng);
        momentum.row(row) = cfg_.beta * momentum.row(row) + (1.0 - cfg_.beta) * g.transpose();
        x.row(row) -= cfg_.rho * momentum.row(row);
      }
    }
    for (std::size_t s = 0; s < header_.comm_rounds_per_step; ++s) {
      ForgedMessages forged(honest.size());
      rec.zeta = 0.0;
      if (!t.byzantine().empty()) {
        const ForgedRound fr = forge_round(make_view(net, x), cfg_.attack, rule_);
        forged = fr.messages;
        rec.zeta = fr.scaling.candidate;
      }
      const Inbox inbox = assemble_inbox(t, x, forged);
      RoundStats stats;
      ParamMatrix y = aggregate_round(t, x, inbox, rule_, &stats);
      rec.clipped += stats.clipped;

      const Eigen::RowVectorXd mean_x = x.colwise().mean();
      rec.step_prev_var = var_h(x);
      rec.step_spread = spread_around(y, mean_x);
      rec.step_bias_sq = (y.colwise().mean() - mean_x).squaredNorm();
      if (has_error_lemma) {
        const ErrorTermReport err = extract_error_term(x, y, rule_.eta, net.w_honest, cfg_.b);
        rec.error_norm_sq = err.norm_sq;
        rec.error_bound = bounds.error_factor * err.pairwise_energy;
      }
      if (monitoring) {
        std::size_t v = 0;
        v += rec.step_spread > bounds.alpha_bound * rec.step_prev_var + kBoundSlack;
        v += rec.step_bias_sq > bounds.lambda_bound * rec.step_prev_var + kBoundSlack;
        const bool ev = has_error_lemma && rec.error_norm_sq > rec.error_bound + kBoundSlack;
        if ((v > 0 || ev) && cfg_.monitor == MonitorMode::Abort)
          fail(ErrorKind::CheckFailure, cfg_.name + ": theorem monitor failed at round " + std::to_string(step + 1));
        rec.violations += v;
        rec.error_violations += ev;
      }
      x = std::move(y);
    }
    fill_state(rec, x, mean0, task_);
    trace.monitor_violations += rec.violations;
    trace.error_violations += rec.error_violations;
    trace.rows.push_back(rec);
  }
  trace.final_x = x;
  return trace;
}

RunTrace mean_estimation_run(const RunConfig& cfg) {
  if (cfg.task.kind != TaskKind::MeanEstimation) fail(ErrorKind::Config, cfg.name + ": not a mean-estimation task");
  return Simulation::prepare(cfg).run();
}

RunTrace dsgd_run(const RunConfig& cfg) {
  if (cfg.task.kind == TaskKind::MeanEstimation) fail(ErrorKind::Config, cfg.name + ": not an optimization task");
  return Simulation::prepare(cfg).run();
}

std::vector<ChainSample> chain_samples(const RunTrace& trace) {
  std::vector<ChainSample> out;
  out.reserve(trace.rows.size());
  for (const RoundRecord& r : trace.rows)
    out.push_back(ChainSample{r.var_h, r.bias_drift, r.step_spread, r.step_bias_sq});
  return out;
}

ViolationReport check_run(const RunTrace& trace) {
  if (trace.header.task != TaskKind::MeanEstimation) {
    ViolationReport r;
    r.skipped = true;
    r.note = "chained bounds apply to pure aggregation runs only";
    return r;
  }
  return check_chain(chain_samples(trace), trace.header.bounds, trace.header.preconditions);
}

}  // namespace byzgossip
