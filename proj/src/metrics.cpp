#include "byzgossip/metrics.hpp"

#include <cmath>

#include "byzgossip/error.hpp"

namespace byzgossip {

double var_h(const ParamMatrix& x) {
  if (x.rows() == 0) fail(ErrorKind::InvalidArgument, "variance of an empty parameter matrix");
  return spread_around(x, x.colwise().mean());
}

double var_h_projection(const ParamMatrix& x) {
  if (x.rows() == 0) fail(ErrorKind::InvalidArgument, "variance of an empty parameter matrix");
  const auto n = x.rows();
  const Eigen::MatrixXd p =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return (p * x).squaredNorm() / static_cast<double>(n);
}

double spread_around(const ParamMatrix& after, const Eigen::RowVectorXd& center) {
  if (after.rows() == 0) fail(ErrorKind::InvalidArgument, "spread of an empty parameter matrix");
  return (after.rowwise() - center).rowwise().squaredNorm().mean();
}

double alpha_measured(const ParamMatrix& before, const ParamMatrix& after) {
  const double v = var_h(before);
  if (v == 0.0) fail(ErrorKind::UndefinedQuantity, "alpha undefined: initial honest variance is zero");
  return spread_around(after, before.colwise().mean()) / v;
}

double mean_shift_sq(const ParamMatrix& before, const ParamMatrix& after) {
  return (after.colwise().mean() - before.colwise().mean()).squaredNorm();
}

double BoundSet::chained_variance(std::size_t t, double var0) const {
  return std::pow(alpha_bound, static_cast<double>(t)) * var0;
}

double BoundSet::cumulative_bias(std::size_t t, double var0) const {
  const double ra = std::sqrt(std::max(alpha_bound, 0.0));
  const double scale = std::sqrt(lambda_bound * var0);
  if (ra >= 1.0) return scale * static_cast<double>(t);
  return scale * (1.0 - std::pow(ra, static_cast<double>(t))) / (1.0 - ra);
}

BoundSet bounds_for(Rule rule, const SpectralInfo& honest, std::size_t b, double eta) {
  BoundSet s;
  s.rule = rule;
  s.b = b;
  s.eta = eta;
  s.mu2 = honest.mu2;
  s.mu_max = honest.mu_max;
  s.gamma = honest.gamma;
  const double bd = static_cast<double>(b);
  double budget = 0.0;
  switch (rule) {
    case Rule::CGPlus: budget = 2.0 * (bd + 1.0); break;
    case Rule::NNA: budget = 8.0 * bd; break;
    case Rule::PlainGossip:
      if (b != 0) {
        s.note = "plain gossip has no guarantee against Byzantine neighbors";
        return s;
      }
      break;
    case Rule::ClippedGossipOracle:
      s.note = "no closed-form bounds for the oracle-threshold rule";
      return s;
  }
  s.error_factor = budget;
  s.alpha_bound = 1.0 - eta * (honest.mu2 - budget);
  s.lambda_bound = eta * budget;
  if (honest.mu2 <= 0.0) {
    s.delta = budget > 0.0 ? INFINITY : 0.0;
    s.note = "honest subgraph is disconnected";
    return s;
  }
  s.delta = budget / honest.mu2;
  if (eta * honest.mu_max > 1.0 + 1e-12) {
    s.note = "eta exceeds 1/mu_max of the honest subgraph";
    return s;
  }
  if (s.delta > 1.0 + 1e-9) {
    s.note = rule == Rule::NNA ? "8b exceeds mu2" : "2(b+1) exceeds mu2";
    return s;
  }
  s.feasible = true;
  const double gap = 1.0 - s.alpha_bound;
  s.asymptotic_bias_factor = gap > 0.0 ? 4.0 * s.lambda_bound / (gap * gap) : INFINITY;
  return s;
}

nlohmann::json to_json(const BoundSet& s) {
  nlohmann::json j;
  j["rule"] = std::string(to_string(s.rule));
  j["b"] = s.b;
  j["eta"] = s.eta;
  j["mu2"] = s.mu2;
  j["mu_max"] = s.mu_max;
  j["alpha_bound"] = s.alpha_bound;
  j["lambda_bound"] = s.lambda_bound;
  j["delta"] = s.delta;
  j["gamma"] = s.gamma;
  j["asymptotic_bias_factor"] = s.asymptotic_bias_factor;
  j["error_factor"] = s.error_factor;
  j["feasible"] = s.feasible;
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

ViolationReport check_chain(const std::vector<ChainSample>& samples, const BoundSet& bounds, bool preconditions) {
  ViolationReport r;
  if (!preconditions || !bounds.feasible) {
    r.skipped = true;
    r.note = !bounds.feasible ? (bounds.note.empty() ? "bounds infeasible" : bounds.note)
                              : "class preconditions do not hold";
    return r;
  }
  if (samples.empty()) return r;
  const double var0 = samples.front().var_h;
  const double asym = bounds.asymptotic_bias_bound(var0);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const ChainSample& s = samples[t];
    RoundCheck c;
    c.round = t;
    if (t > 0) {
      const double prev = samples[t - 1].var_h;
      c.one_step_alpha = s.step_spread <= bounds.alpha_bound * prev + kBoundSlack;
      c.one_step_lambda = s.step_bias_sq <= bounds.lambda_bound * prev + kBoundSlack;
    }
    c.chained_variance = s.var_h <= bounds.chained_variance(t, var0) + kBoundSlack;
    c.cumulative_bias = s.bias_drift <= bounds.cumulative_bias(t, var0) + kBoundSlack;
    c.asymptotic_bias = s.bias_drift * s.bias_drift <= asym + kBoundSlack;
    r.one_step_alpha += !c.one_step_alpha;
    r.one_step_lambda += !c.one_step_lambda;
    r.chained_variance += !c.chained_variance;
    r.cumulative_bias += !c.cumulative_bias;
    r.asymptotic_bias += !c.asymptotic_bias;
    r.rounds.push_back(c);
  }
  return r;
}

nlohmann::json to_json(const ViolationReport& r) {
  nlohmann::json j;
  j["skipped"] = r.skipped;
  if (!r.note.empty()) j["note"] = r.note;
  j["violations"] = {{"one_step_alpha", r.one_step_alpha},   {"one_step_lambda", r.one_step_lambda},
                     {"chained_variance", r.chained_variance}, {"cumulative_bias", r.cumulative_bias},
                     {"asymptotic_bias", r.asymptotic_bias}, {"total", r.total()}};
  nlohmann::json failing = nlohmann::json::array();
  for (const RoundCheck& c : r.rounds) {
    if (c.one_step_alpha && c.one_step_lambda && c.chained_variance && c.cumulative_bias && c.asymptotic_bias)
      continue;
    failing.push_back({{"round", c.round},
                       {"one_step_alpha", c.one_step_alpha},
                       {"one_step_lambda", c.one_step_lambda},
                       {"chained_variance", c.chained_variance},
                       {"cumulative_bias", c.cumulative_bias},
                       {"asymptotic_bias", c.asymptotic_bias}});
  }
  j["failing_rounds"] = failing;
  return j;
}

}  // namespace byzgossip
