#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "byzgossip/graph.hpp"

namespace byzgossip {

/// Honest parameters, one row per honest node in Topology::honest() order.
using ParamMatrix = Eigen::MatrixXd;

struct Message {
  NodeId sender = 0;
  Eigen::VectorXd value;
};

/// Declared neighbor vectors, per honest receiver row. Each row holds exactly
/// one message per graph neighbor, sorted by sender id.
struct Inbox {
  std::vector<std::vector<Message>> rows;

  std::size_t entry_count() const noexcept;
};

/// Byzantine entries per honest receiver row, sorted by sender id.
using ForgedMessages = std::vector<std::vector<Message>>;

/// Honest-to-honest entries copied from `x`, merged with the forged entries.
/// Throws ProtocolViolation when forged entries miss a Byzantine-to-honest
/// edge, duplicate one, or sit on a non-edge or an honest sender.
Inbox assemble_inbox(const Topology& t, const ParamMatrix& x, const ForgedMessages& forged);

/// Throws ProtocolViolation unless `inbox` has one entry per (honest receiver,
/// neighbor) pair and every honest sender's entry equals its row of `x`.
void validate_inbox(const Topology& t, const ParamMatrix& x, const Inbox& inbox);

enum class Rule { PlainGossip, CGPlus, NNA, ClippedGossipOracle };

std::string_view to_string(Rule r) noexcept;
Rule rule_from_string(std::string_view s);

struct RuleConfig {
  Rule rule = Rule::CGPlus;
  std::size_t b = 0;
  double eta = 0.0;
  /// NNA only: node i uses 1 / (|n(i)| - b + 1) instead of eta.
  bool nna_per_node_step = false;
};

/// Builds a RuleConfig checked against the full graph: eta must be positive and
/// at most 1 / mu_max(G) unless `allow_large_eta`.
RuleConfig make_rule_config(Rule rule, std::size_t b, double eta, const Topology& t, bool allow_large_eta = false);

/// Per-round instrumentation: messages clipped (CG variants) or dropped (NNA).
struct RoundStats {
  std::size_t clipped = 0;
};

/// Radial clipping onto the ball of radius tau.
Eigen::VectorXd clip(const Eigen::VectorXd& v, double tau);

/// (b+1)-th largest distance; 0 when b + 1 exceeds the number of distances.
double cgplus_threshold(std::span<const double> distances, std::size_t b);

ParamMatrix plain_gossip_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, double eta);
ParamMatrix cgplus_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, const RuleConfig& cfg,
                         RoundStats* stats = nullptr);
ParamMatrix nna_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, const RuleConfig& cfg,
                         RoundStats* stats = nullptr);

/// ClippedGossip with the honest-label oracle threshold
/// tau_i = sqrt(sum_{j in n_H(i)} ||x_i - x_j||^2 / ((|H| - b) b)).
/// Simulation-only: it reads the labels off the topology.
ParamMatrix clippedgossip_oracle_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox,
                                       const RuleConfig& cfg, RoundStats* stats = nullptr);

/// Dispatch on cfg.rule.
ParamMatrix aggregate_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, const RuleConfig& cfg,
                         RoundStats* stats = nullptr);

/// <X, W X> (Frobenius inner product).
double laplacian_energy(const ParamMatrix& x, const Eigen::MatrixXd& w);
/// 1/2 sum over ordered neighbor pairs of ||x_i - x_j||^2, neighbors read off W's off-diagonal.
double pairwise_energy(const ParamMatrix& x, const Eigen::MatrixXd& w);

struct ErrorTermReport {
  Eigen::MatrixXd error;
  double norm_sq = 0.0;
  double pairwise_energy = 0.0;
  double bound_cgplus = 0.0;
  double bound_nna = 0.0;
};

/// E = (X_after - (I - eta W_H) X_before) / eta, with the clipping and NNA bounds.
ErrorTermReport extract_error_term(const ParamMatrix& before, const ParamMatrix& after, double eta,
                                   const Eigen::MatrixXd& w_honest, std::size_t b);

nlohmann::json to_json(const ErrorTermReport& r);

}  // namespace byzgossip
