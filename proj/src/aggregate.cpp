#include "byzgossip/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byzgossip/error.hpp"
#include "byzgossip/spectral.hpp"

namespace byzgossip {

std::size_t Inbox::entry_count() const noexcept {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

Inbox assemble_inbox(const Topology& t, const ParamMatrix& x, const ForgedMessages& forged) {
  const auto honest = t.honest();
  if (static_cast<std::size_t>(x.rows()) != honest.size())
    fail(ErrorKind::ContractViolation, "parameter matrix rows do not match honest node count");
  if (forged.size() != honest.size())
    fail(ErrorKind::ProtocolViolation, "forged messages cover " + std::to_string(forged.size()) +
                                           " receivers, expected " + std::to_string(honest.size()));
  Inbox inbox;
  inbox.rows.resize(honest.size());
  for (std::size_t r = 0; r < honest.size(); ++r) {
    const NodeId i = honest[r];
    for (const Message& m : forged[r]) {
      if (!t.has_edge(i, m.sender))
        fail(ErrorKind::ProtocolViolation, "forged message " + std::to_string(m.sender) + " -> " + std::to_string(i) +
                                               " is not on an edge");
      if (!t.is_byzantine(m.sender))
        fail(ErrorKind::ProtocolViolation, "forged message from honest node " + std::to_string(m.sender));
    }
    auto f = forged[r].begin();
    for (NodeId j : t.neighbors(i)) {
      if (auto hj = t.honest_index(j)) {
        inbox.rows[r].push_back(Message{j, x.row(static_cast<Eigen::Index>(*hj)).transpose()});
        continue;
      }
      if (f == forged[r].end() || f->sender != j)
        fail(ErrorKind::ProtocolViolation, "no forged message (or out of order) from Byzantine " + std::to_string(j) +
                                               " to " + std::to_string(i));
      inbox.rows[r].push_back(*f++);
    }
    if (f != forged[r].end())
      fail(ErrorKind::ProtocolViolation, "duplicate forged message to node " + std::to_string(i));
  }
  return inbox;
}

void validate_inbox(const Topology& t, const ParamMatrix& x, const Inbox& inbox) {
  const auto honest = t.honest();
  if (static_cast<std::size_t>(x.rows()) != honest.size())
    fail(ErrorKind::ContractViolation, "parameter matrix rows do not match honest node count");
  if (inbox.rows.size() != honest.size())
    fail(ErrorKind::ProtocolViolation, "inbox has " + std::to_string(inbox.rows.size()) + " receivers, expected " +
                                           std::to_string(honest.size()));
  for (std::size_t r = 0; r < honest.size(); ++r) {
    const NodeId i = honest[r];
    const auto nbrs = t.neighbors(i);
    const auto& msgs = inbox.rows[r];
    if (msgs.size() != nbrs.size())
      fail(ErrorKind::ProtocolViolation, "node " + std::to_string(i) + " expected " + std::to_string(nbrs.size()) +
                                             " messages, got " + std::to_string(msgs.size()));
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (msgs[k].sender != nbrs[k])
        fail(ErrorKind::ProtocolViolation, "node " + std::to_string(i) + " missing message from neighbor " +
                                               std::to_string(nbrs[k]));
      if (msgs[k].value.size() != x.cols())
        fail(ErrorKind::ProtocolViolation, "message dimension mismatch at node " + std::to_string(i));
      if (auto hj = t.honest_index(nbrs[k]); hj && msgs[k].value != x.row(static_cast<Eigen::Index>(*hj)).transpose())
        fail(ErrorKind::ProtocolViolation, "honest sender " + std::to_string(nbrs[k]) + " misreported to node " +
                                               std::to_string(i));
    }
  }
}

std::string_view to_string(Rule r) noexcept {
  switch (r) {
    case Rule::PlainGossip: return "PlainGossip";
    case Rule::CGPlus: return "CGPlus";
    case Rule::NNA: return "NNA";
    case Rule::ClippedGossipOracle: return "ClippedGossipOracle";
  }
  return "?";
}

Rule rule_from_string(std::string_view s) {
  for (Rule r : {Rule::PlainGossip, Rule::CGPlus, Rule::NNA, Rule::ClippedGossipOracle})
    if (s == to_string(r)) return r;
  fail(ErrorKind::Config, "unknown rule '" + std::string(s) + "'");
}

RuleConfig make_rule_config(Rule rule, std::size_t b, double eta, const Topology& t, bool allow_large_eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) fail(ErrorKind::InvalidArgument, "eta must be positive and finite");
  if (rule == Rule::ClippedGossipOracle && b == 0)
    fail(ErrorKind::InvalidArgument, "oracle ClippedGossip threshold is undefined for b = 0");
  if (!allow_large_eta) {
    const double mu_max = spectral_info(laplacian(t)).mu_max;
    if (mu_max > 0.0 && eta * mu_max > 1.0 + 1e-12)
      fail(ErrorKind::InvalidArgument, "eta = " + std::to_string(eta) + " exceeds 1/mu_max(G) = " +
                                           std::to_string(1.0 / mu_max));
  }
  return RuleConfig{rule, b, eta, false};
}

Eigen::VectorXd clip(const Eigen::VectorXd& v, double tau) {
  if (tau < 0.0) fail(ErrorKind::InvalidArgument, "clipping radius must be non-negative");
  const double len = v.norm();
  if (len <= tau) return v;
  return v * (tau / len);
}

double cgplus_threshold(std::span<const double> distances, std::size_t b) {
  if (b + 1 > distances.size()) return 0.0;
  std::vector<double> d(distances.begin(), distances.end());
  auto nth = d.begin() + static_cast<std::ptrdiff_t>(b);
  std::nth_element(d.begin(), nth, d.end(), std::greater<>());
  return *nth;
}

namespace {

// declared minus own value, in sender-id order
struct Neighborhood {
  std::vector<Eigen::VectorXd> diffs;
  std::vector<double> dist;
};

Neighborhood gather(const ParamMatrix& x, const Inbox& inbox, std::size_t row) {
  Neighborhood nb;
  const Eigen::VectorXd xi = x.row(static_cast<Eigen::Index>(row)).transpose();
  for (const Message& m : inbox.rows[row]) {
    nb.diffs.push_back(m.value - xi);
    nb.dist.push_back(nb.diffs.back().norm());
  }
  return nb;
}

template <class Update>
ParamMatrix apply_rows(const Topology& t, const ParamMatrix& x, const Inbox& inbox, Update&& update) {
  if (static_cast<std::size_t>(x.rows()) != inbox.rows.size())
    fail(ErrorKind::ProtocolViolation, "inbox receivers do not match parameter rows");
  validate_inbox(t, x, inbox);
  ParamMatrix y = x;
  for (std::size_t r = 0; r < inbox.rows.size(); ++r) {
    const Neighborhood nb = gather(x, inbox, r);
    y.row(static_cast<Eigen::Index>(r)) += update(r, nb).transpose();
  }
  return y;
}

}  // namespace

ParamMatrix plain_gossip_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, double eta) {
  return apply_rows(t, x, inbox, [&](std::size_t, const Neighborhood& nb) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(x.cols());
    for (const auto& d : nb.diffs) s += d;
    return Eigen::VectorXd(eta * s);
  });
}

namespace {

Eigen::VectorXd clipped_sum(const Neighborhood& nb, double tau, Eigen::Index dim, RoundStats* stats) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < nb.diffs.size(); ++k) {
    if (stats && nb.dist[k] > tau) ++stats->clipped;
    s += clip(nb.diffs[k], tau);
  }
  return s;
}

}  // namespace

ParamMatrix cgplus_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, const RuleConfig& cfg,
                         RoundStats* stats) {
  return apply_rows(t, x, inbox, [&](std::size_t, const Neighborhood& nb) {
    const Eigen::VectorXd s = clipped_sum(nb, cgplus_threshold(nb.dist, cfg.b), x.cols(), stats);
    return Eigen::VectorXd(cfg.eta * s);
  });
}

ParamMatrix nna_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, const RuleConfig& cfg,
                      RoundStats* stats) {
  return apply_rows(t, x, inbox, [&](std::size_t, const Neighborhood& nb) {
    const std::size_t deg = nb.diffs.size();
    std::vector<std::size_t> order(deg);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // furthest first; equal distances drop the lower sender id first
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return nb.dist[a] > nb.dist[c]; });
    std::vector<bool> keep(deg, true);
    const std::size_t dropped = std::min(cfg.b, deg);
    for (std::size_t k = 0; k < dropped; ++k) keep[order[k]] = false;
    if (stats) stats->clipped += dropped;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(x.cols());
    for (std::size_t k = 0; k < deg; ++k)
      if (keep[k]) s += nb.diffs[k];
    double eta = cfg.eta;
    if (cfg.nna_per_node_step) eta = deg >= cfg.b ? 1.0 / static_cast<double>(deg - cfg.b + 1) : 0.0;
    return Eigen::VectorXd(eta * s);
  });
}

ParamMatrix clippedgossip_oracle_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox,
                                       const RuleConfig& cfg, RoundStats* stats) {
  if (cfg.b == 0) fail(ErrorKind::InvalidArgument, "oracle ClippedGossip threshold is undefined for b = 0");
  const std::size_t h = t.honest_count();
  if (h <= cfg.b) fail(ErrorKind::InvalidArgument, "oracle ClippedGossip needs |H| > b");
  const double denom = static_cast<double>((h - cfg.b) * cfg.b);
  return apply_rows(t, x, inbox, [&](std::size_t r, const Neighborhood& nb) {
    const NodeId i = t.honest()[r];
    double honest_sq = 0.0;
    const auto nbrs = t.neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k)
      if (!t.is_byzantine(nbrs[k])) honest_sq += nb.dist[k] * nb.dist[k];
    const Eigen::VectorXd s = clipped_sum(nb, std::sqrt(honest_sq / denom), x.cols(), stats);
    return Eigen::VectorXd(cfg.eta * s);
  });
}

ParamMatrix aggregate_round(const Topology& t, const ParamMatrix& x, const Inbox& inbox, const RuleConfig& cfg,
                            RoundStats* stats) {
  switch (cfg.rule) {
    case Rule::PlainGossip: return plain_gossip_round(t, x, inbox, cfg.eta);
    case Rule::CGPlus: return cgplus_round(t, x, inbox, cfg, stats);
    case Rule::NNA: return nna_round(t, x, inbox, cfg, stats);
    case Rule::ClippedGossipOracle: return clippedgossip_oracle_round(t, x, inbox, cfg, stats);
  }
  fail(ErrorKind::InvalidArgument, "unknown rule");
}

double laplacian_energy(const ParamMatrix& x, const Eigen::MatrixXd& w) {
  return (x.transpose() * w * x).trace();
}

double pairwise_energy(const ParamMatrix& x, const Eigen::MatrixXd& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (i != j && w(i, j) != 0.0) s += -w(i, j) * (x.row(i) - x.row(j)).squaredNorm();
  return 0.5 * s;
}

ErrorTermReport extract_error_term(const ParamMatrix& before, const ParamMatrix& after, double eta,
                                   const Eigen::MatrixXd& w_honest, std::size_t b) {
  if (!(eta > 0.0)) fail(ErrorKind::InvalidArgument, "eta must be positive");
  if (before.rows() != after.rows() || before.cols() != after.cols() || w_honest.rows() != before.rows())
    fail(ErrorKind::ContractViolation, "error-term dimensions disagree");
  ErrorTermReport rep;
  rep.error = (after - (before - eta * (w_honest * before))) / eta;
  rep.norm_sq = rep.error.squaredNorm();
  rep.pairwise_energy = pairwise_energy(before, w_honest);
  rep.bound_cgplus = 2.0 * static_cast<double>(b + 1) * rep.pairwise_energy;
  rep.bound_nna = 8.0 * static_cast<double>(b) * rep.pairwise_energy;
  return rep;
}

nlohmann::json to_json(const ErrorTermReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.error.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(r.error.cols()));
    for (Eigen::Index j = 0; j < r.error.cols(); ++j) row[static_cast<std::size_t>(j)] = r.error(i, j);
    rows.push_back(row);
  }
  return {{"E", rows},
          {"norm_sq", r.norm_sq},
          {"pairwise_energy", r.pairwise_energy},
          {"bound_cgplus", r.bound_cgplus},
          {"bound_nna", r.bound_nna}};
}

}  // namespace byzgossip
