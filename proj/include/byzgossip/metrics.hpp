#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "byzgossip/aggregate.hpp"
#include "byzgossip/spectral.hpp"

namespace byzgossip {

inline constexpr double kBoundSlack = 1e-9;

/// (1/|H|) sum_i ||x_i - mean||^2. Throws InvalidArgument on an empty matrix.
double var_h(const ParamMatrix& x);
/// Same quantity computed as ||(I - 11^T/n) X||_F^2 / n.
double var_h_projection(const ParamMatrix& x);

/// (1/|H|) sum_i ||after_i - mean(before)||^2.
double spread_around(const ParamMatrix& after, const Eigen::RowVectorXd& center);

/// One-step robustness ratio spread_around(after, mean(before)) / var_h(before).
/// Throws UndefinedQuantity when var_h(before) is zero.
double alpha_measured(const ParamMatrix& before, const ParamMatrix& after);

/// ||mean(after) - mean(before)||^2.
double mean_shift_sq(const ParamMatrix& before, const ParamMatrix& after);

struct BoundSet {
  Rule rule = Rule::CGPlus;
  std::size_t b = 0;
  double eta = 0.0;
  double mu2 = 0.0;
  double mu_max = 0.0;
  double alpha_bound = 1.0;
  double lambda_bound = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  /// Factor c in ||bias_inf||^2 <= c Var_H(x^0); equals 4 delta / (gamma (1 - delta)^2) at eta = 1/mu_max.
  double asymptotic_bias_factor = 0.0;
  /// Multiplier k in ||E||^2 <= k ||X||^2_W; 0 when the rule has no error lemma.
  double error_factor = 0.0;
  bool feasible = false;
  std::string note;

  double asymptotic_bias_bound(double var0) const { return asymptotic_bias_factor * var0; }
  /// alpha^t Var_0.
  double chained_variance(std::size_t t, double var0) const;
  /// sqrt(lambda Var_0) (1 - alpha^{t/2}) / (1 - sqrt(alpha)): bound on ||mean_t - mean_0||.
  double cumulative_bias(std::size_t t, double var0) const;
};

/// Closed-form bounds with mu_min instantiated by the measured mu2 of the honest
/// subgraph. Infeasible parameter ranges set `feasible = false` and fill `note`.
BoundSet bounds_for(Rule rule, const SpectralInfo& honest, std::size_t b, double eta);

nlohmann::json to_json(const BoundSet& s);

/// Chained-bound input: one entry per recorded round, starting at round 0.
struct ChainSample {
  double var_h = 0.0;
  double bias_drift = 0.0;       // ||mean_t - mean_0||
  double step_spread = 0.0;      // (1/|H|) sum ||x^t_i - mean_{t-1}||^2, unused at t = 0
  double step_bias_sq = 0.0;     // ||mean_t - mean_{t-1}||^2, unused at t = 0
};

struct RoundCheck {
  std::size_t round = 0;
  bool one_step_alpha = true;
  bool one_step_lambda = true;
  bool chained_variance = true;
  bool cumulative_bias = true;
  bool asymptotic_bias = true;
};

struct ViolationReport {
  bool skipped = false;
  std::string note;
  std::vector<RoundCheck> rounds;
  std::size_t one_step_alpha = 0;
  std::size_t one_step_lambda = 0;
  std::size_t chained_variance = 0;
  std::size_t cumulative_bias = 0;
  std::size_t asymptotic_bias = 0;

  std::size_t total() const noexcept {
    return one_step_alpha + one_step_lambda + chained_variance + cumulative_bias + asymptotic_bias;
  }
};

/// Per-round evaluation of the one-step and chained inequalities at slack 1e-9.
/// Skipped (with a note) when the bound set is infeasible or `preconditions` is false.
ViolationReport check_chain(const std::vector<ChainSample>& samples, const BoundSet& bounds, bool preconditions);

nlohmann::json to_json(const ViolationReport& r);

}  // namespace byzgossip
