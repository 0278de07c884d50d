#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "byzgossip/adversary.hpp"
#include "byzgossip/aggregate.hpp"
#include "byzgossip/metrics.hpp"
#include "byzgossip/network.hpp"

namespace byzgossip {

enum class TaskKind { MeanEstimation, QuadraticSum, LogisticSynthetic };

std::string_view to_string(TaskKind k) noexcept;
TaskKind task_from_string(std::string_view s);

/// Recipe for a task; instantiated per honest population and seed.
struct TaskSpec {
  TaskKind kind = TaskKind::MeanEstimation;
  std::size_t dim = 1;
  /// y_i ~ center + spread * N(0, I) unless `targets` is given.
  double center = 0.0;
  double spread = 1.0;
  /// Explicit y_i, one row per honest node.
  std::optional<Eigen::MatrixXd> targets;
  /// Quadratic curvature c in f_i(x) = c/2 ||x - y_i||^2.
  double curvature = 1.0;
  double noise_sigma = 0.0;
  /// Optimization tasks start at init (every coordinate) plus init_jitter * N(0, I).
  double init = 0.0;
  double init_jitter = 0.0;
  /// LogisticSynthetic: samples per node, ridge weight, per-node feature shift.
  std::size_t samples_per_node = 32;
  double l2 = 0.01;
  double feature_shift = 0.5;
};

/// Instantiated task.
struct Task {
  TaskKind kind = TaskKind::MeanEstimation;
  std::size_t dim = 1;
  Eigen::MatrixXd targets;                 // mean estimation / quadratic
  double curvature = 1.0;
  std::vector<Eigen::MatrixXd> features;   // logistic: samples x dim per node
  std::vector<Eigen::VectorXd> labels;     // logistic: +-1 per sample
  double l2 = 0.0;
  double noise_sigma = 0.0;
  double smoothness = 0.0;                 // L
  double heterogeneity_sq = 0.0;           // zeta^2
  bool is_optimization() const noexcept { return kind != TaskKind::MeanEstimation; }
};

Task make_task(const TaskSpec& spec, std::size_t honest_count, std::uint64_t seed);

/// Exact local gradient of f_row at x. Mean estimation uses f_i = 1/2 ||x - y_i||^2.
Eigen::VectorXd exact_gradient(const Task& task, std::size_t row, const Eigen::VectorXd& x);
/// Gradient of f_H = mean_i f_i at x.
Eigen::VectorXd global_gradient(const Task& task, const Eigen::VectorXd& x);
/// exact_gradient + isotropic Gaussian noise with coordinate std sigma.
Eigen::VectorXd gradient_oracle(const Task& task, std::size_t row, const Eigen::VectorXd& x, std::mt19937_64& rng);

enum class MonitorMode { Off, Record, Abort };

std::string_view to_string(MonitorMode m) noexcept;
MonitorMode monitor_from_string(std::string_view s);

struct CommRounds {
  bool automatic = false;
  std::size_t value = 1;
};

struct RunConfig {
  std::string name = "run";
  std::shared_ptr<const Network> network;
  Rule rule = Rule::CGPlus;
  std::size_t b = 0;
  /// Non-positive means 1 / mu_max(G).
  double eta = 0.0;
  bool allow_large_eta = false;
  bool nna_per_node_step = false;
  AttackSpec attack;
  TaskSpec task;
  double rho = 0.0;
  double beta = 0.9;
  std::size_t rounds = 0;
  CommRounds comm_rounds_per_step;
  std::uint64_t seed = 0;
  MonitorMode monitor = MonitorMode::Record;
};

/// Size of the multi-step regime: ceil(ln 10 / (gamma (1 - delta))).
std::size_t auto_comm_rounds(double gamma, double delta);

struct RoundRecord {
  std::size_t round = 0;
  double var_h = 0.0;
  double bias_drift = 0.0;           // ||mean_t - mean_0||
  double mse_to_initial_mean = 0.0;
  double grad_norm_sq = 0.0;         // mean_i ||grad f_H(x_i)||^2
  double step_spread = 0.0;          // last aggregation round: (1/|H|) sum ||y_i - mean(x)||^2
  double step_bias_sq = 0.0;         // last aggregation round: ||mean(y) - mean(x)||^2
  double step_prev_var = 0.0;        // last aggregation round: Var_H(x)
  double error_norm_sq = 0.0;        // last aggregation round: ||E||^2
  double error_bound = 0.0;          // last aggregation round: factor * ||X||^2_W
  double zeta = 0.0;                 // last aggregation round: chosen scaling candidate
  std::size_t clipped = 0;           // clipped or dropped messages this row
  std::size_t violations = 0;        // one-step variance or bias bound failures this row
  std::size_t error_violations = 0;  // error-term bound failures this row
};

struct RunHeader {
  std::string name;
  Rule rule = Rule::CGPlus;
  std::size_t b = 0;
  double eta = 0.0;
  AttackKind attack = AttackKind::None;
  TaskKind task = TaskKind::MeanEstimation;
  std::size_t dim = 0;
  double rho = 0.0;
  double beta = 0.0;
  std::size_t rounds = 0;
  std::size_t comm_rounds_per_step = 1;
  std::uint64_t seed = 0;
  MonitorMode monitor = MonitorMode::Record;
  SpectralInfo full_spectrum;
  SpectralInfo honest_spectrum;
  GammaReport membership;
  BoundSet bounds;
  bool preconditions = false;
  double smoothness = 0.0;
  double noise_sigma = 0.0;
  double heterogeneity_sq = 0.0;
};

struct RunTrace {
  RunHeader header;
  std::vector<RoundRecord> rows;
  ParamMatrix final_x;
  std::size_t monitor_violations = 0;
  std::size_t error_violations = 0;
};

/// A validated configuration; every config error is raised by `prepare`.
class Simulation {
 public:
  static Simulation prepare(const RunConfig& cfg);

  const RunConfig& config() const noexcept { return cfg_; }
  const RuleConfig& rule() const noexcept { return rule_; }
  const Task& task() const noexcept { return task_; }
  const RunHeader& header() const noexcept { return header_; }
  ParamMatrix initial_state() const;

  RunTrace run() const;

 private:
  RunConfig cfg_;
  RuleConfig rule_;
  Task task_;
  RunHeader header_;
};

/// Repeated aggregation on a mean-estimation task.
RunTrace mean_estimation_run(const RunConfig& cfg);
/// Momentum D-SGD with robust aggregation after each local step.
RunTrace dsgd_run(const RunConfig& cfg);

/// Chained-bound input extracted from a trace.
std::vector<ChainSample> chain_samples(const RunTrace& trace);
/// Per-round theorem checks for a mean-estimation trace; skipped for optimization runs.
ViolationReport check_run(const RunTrace& trace);

}  // namespace byzgossip
