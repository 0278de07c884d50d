#include "byzgossip/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "byzgossip/error.hpp"

namespace byzgossip {

std::string_view to_string(AttackKind k) noexcept {
  switch (k) {
    case AttackKind::None: return "None";
    case AttackKind::ALIE: return "ALIE";
    case AttackKind::FOE: return "FOE";
    case AttackKind::Dissensus: return "Dissensus";
    case AttackKind::SpectralHeterogeneity: return "SpectralHeterogeneity";
    case AttackKind::TwoWorld: return "TwoWorld";
  }
  return "?";
}

AttackKind attack_from_string(std::string_view s) {
  for (AttackKind k : {AttackKind::None, AttackKind::ALIE, AttackKind::FOE, AttackKind::Dissensus,
                       AttackKind::SpectralHeterogeneity, AttackKind::TwoWorld})
    if (s == to_string(k)) return k;
  fail(ErrorKind::Config, "unknown attack '" + std::string(s) + "'");
}

ScalingGrid default_grid() { return ScalingGrid{{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}, true}; }

OmniscientView make_view(const Network& net, const ParamMatrix& x) {
  if (static_cast<std::size_t>(x.rows()) != net.topology.honest_count())
    fail(ErrorKind::ContractViolation, "parameter rows do not match honest node count");
  OmniscientView v;
  v.network = &net;
  v.x = x;
  v.mean = x.rows() > 0 ? Eigen::VectorXd(x.colwise().mean().transpose()) : Eigen::VectorXd::Zero(x.cols());
  return v;
}

namespace {

Eigen::MatrixXd broadcast(const Eigen::VectorXd& a, Eigen::Index rows) {
  return a.transpose().replicate(rows, 1);
}

}  // namespace

Eigen::MatrixXd alie_direction(const OmniscientView& v) {
  if (v.x.rows() < 2) fail(ErrorKind::InsufficientPopulation, "ALIE needs at least two honest nodes");
  const Eigen::MatrixXd centered = v.x.rowwise() - v.mean.transpose();
  const Eigen::VectorXd sd = (centered.array().square().colwise().sum() / static_cast<double>(v.x.rows())).sqrt();
  return broadcast(sd, v.x.rows());
}

Eigen::MatrixXd foe_direction(const OmniscientView& v) { return broadcast(-v.mean, v.x.rows()); }

Eigen::MatrixXd dissensus_direction(const OmniscientView& v) { return v.w_honest() * v.x; }

Eigen::MatrixXd sph_direction(const OmniscientView& v) {
  const Eigen::VectorXd& f = v.fiedler();
  if (f.size() == 0 || v.network->honest_spectrum.mu2 <= 0.0)
    fail(ErrorKind::UndefinedQuantity, "Fiedler vector undefined: honest subgraph is disconnected");
  return f * (f.transpose() * v.x);
}

Eigen::MatrixXd two_world_direction(const OmniscientView& v, const std::vector<int>& worlds) {
  if (worlds.empty()) return Eigen::MatrixXd::Zero(v.x.rows(), v.x.cols());
  if (worlds.size() != static_cast<std::size_t>(v.x.rows()))
    fail(ErrorKind::InvalidArgument, "TwoWorld labels must cover every honest node");
  std::map<int, std::pair<Eigen::VectorXd, double>> acc;
  for (Eigen::Index r = 0; r < v.x.rows(); ++r) {
    auto [it, fresh] = acc.try_emplace(worlds[static_cast<std::size_t>(r)], Eigen::VectorXd::Zero(v.x.cols()), 0.0);
    it->second.first += v.x.row(r).transpose();
    it->second.second += 1.0;
  }
  Eigen::MatrixXd a(v.x.rows(), v.x.cols());
  for (Eigen::Index r = 0; r < v.x.rows(); ++r) {
    const auto& [sum, count] = acc.at(worlds[static_cast<std::size_t>(r)]);
    a.row(r) = (sum / count).transpose() - v.x.row(r);
  }
  return a;
}

Eigen::MatrixXd attack_direction(const OmniscientView& v, const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::None: return Eigen::MatrixXd::Zero(v.x.rows(), v.x.cols());
    case AttackKind::ALIE: return alie_direction(v);
    case AttackKind::FOE: return foe_direction(v);
    case AttackKind::Dissensus: return dissensus_direction(v);
    case AttackKind::SpectralHeterogeneity: return sph_direction(v);
    case AttackKind::TwoWorld: return two_world_direction(v, spec.worlds);
  }
  fail(ErrorKind::InvalidArgument, "unknown attack");
}

Eigen::MatrixXd lookahead_operator(const Eigen::MatrixXd& w, double eta, int s) {
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(w.rows(), w.cols()) - eta * w;
  Eigen::MatrixXd out = w;
  for (int k = 0; k < 2 * s; ++k) out = out * step;
  return out;
}

Eigen::VectorXd target_scalings(const Eigen::MatrixXd& directions, double candidate, bool normalize) {
  Eigen::VectorXd zeta = Eigen::VectorXd::Constant(directions.rows(), candidate);
  if (normalize)
    for (Eigen::Index r = 0; r < directions.rows(); ++r) zeta[r] = candidate / std::max(directions.row(r).norm(), 1e-12);
  return zeta;
}

ForgedMessages forge_messages(const OmniscientView& v, const AttackSpec& spec, const Eigen::MatrixXd& directions,
                              const Eigen::VectorXd& zeta) {
  const Topology& t = v.topology();
  const auto honest = t.honest();
  ForgedMessages out(honest.size());
  for (std::size_t r = 0; r < honest.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    Eigen::VectorXd declared;
    switch (spec.kind) {
      case AttackKind::None:
        declared = v.x.row(row).transpose();
        break;
      case AttackKind::TwoWorld:
        declared = (v.x.row(row) + directions.row(row)).transpose();
        break;
      default: {
        const Eigen::VectorXd base = spec.centered_on_target ? Eigen::VectorXd(v.x.row(row).transpose()) : v.mean;
        declared = base + zeta[row] * directions.row(row).transpose();
      }
    }
    for (NodeId j : t.neighbors(honest[r]))
      if (t.is_byzantine(j)) out[r].push_back(Message{j, declared});
  }
  return out;
}

double mse_damage(const ParamMatrix& before, const ParamMatrix& after) {
  const Eigen::RowVectorXd mean = before.colwise().mean();
  return (after.rowwise() - mean).rowwise().squaredNorm().mean();
}

namespace {

double simulate(const OmniscientView& v, const AttackSpec& spec, const RuleConfig& rule, const Eigen::MatrixXd& dir,
                const Eigen::VectorXd& zeta, const DamageMetric& damage) {
  const ForgedMessages forged = forge_messages(v, spec, dir, zeta);
  const Inbox inbox = assemble_inbox(v.topology(), v.x, forged);
  const ParamMatrix after = aggregate_round(v.topology(), v.x, inbox, rule);
  return damage(v.x, after);
}

ScalingChoice search_with(const OmniscientView& v, const AttackSpec& spec, const RuleConfig& rule,
                          const Eigen::MatrixXd& dir, const DamageMetric& damage) {
  ScalingChoice best;
  if (const double* fixed = std::get_if<double>(&spec.scaling)) {
    best.candidate = *fixed;
    best.zeta = Eigen::VectorXd::Constant(v.x.rows(), *fixed);
    best.damage = simulate(v, spec, rule, dir, best.zeta, damage);
    return best;
  }
  const ScalingGrid& grid = std::get<ScalingGrid>(spec.scaling);
  if (grid.values.empty()) fail(ErrorKind::InvalidArgument, "empty scaling grid");
  for (double g : grid.values)
    if (!std::isfinite(g)) fail(ErrorKind::InvalidArgument, "non-finite scaling candidate");
  std::vector<double> candidates = grid.values;
  std::sort(candidates.begin(), candidates.end());
  bool first = true;
  for (double g : candidates) {
    const Eigen::VectorXd zeta = target_scalings(dir, g, grid.normalize);
    const double d = simulate(v, spec, rule, dir, zeta, damage);
    if (first || d > best.damage) {
      best = ScalingChoice{g, zeta, d};
      first = false;
    }
  }
  if (!spec.per_target_search) return best;

  for (Eigen::Index r = 0; r < v.x.rows(); ++r) {
    double best_value = best.zeta[r];
    double best_damage = best.damage;
    bool improved = false;
    for (double g : candidates) {
      Eigen::VectorXd zeta = best.zeta;
      zeta[r] = grid.normalize ? g / std::max(dir.row(r).norm(), 1e-12) : g;
      const double d = simulate(v, spec, rule, dir, zeta, damage);
      if (d > best_damage || (d == best_damage && zeta[r] < best_value)) {
        best_damage = d;
        best_value = zeta[r];
        improved = true;
      }
    }
    if (improved) {
      best.zeta[r] = best_value;
      best.damage = best_damage;
    }
  }
  return best;
}

}  // namespace

ScalingChoice search_scaling(const OmniscientView& v, const AttackSpec& spec, const RuleConfig& rule,
                             const DamageMetric& damage) {
  return search_with(v, spec, rule, attack_direction(v, spec), damage);
}

ForgedRound forge_round(const OmniscientView& v, const AttackSpec& spec, const RuleConfig& rule,
                        const DamageMetric& damage) {
  ForgedRound out;
  const Eigen::MatrixXd dir = attack_direction(v, spec);
  out.direction_norm = dir.rows() > 0 ? dir.rowwise().norm().maxCoeff() : 0.0;
  if (spec.kind == AttackKind::None || spec.kind == AttackKind::TwoWorld || v.topology().byzantine().empty()) {
    out.scaling.zeta = Eigen::VectorXd::Zero(v.x.rows());
  } else {
    out.scaling = search_with(v, spec, rule, dir, damage);
  }
  out.messages = forge_messages(v, spec, dir, out.scaling.zeta);
  return out;
}

std::vector<int> ghb_worlds(std::size_t m) {
  std::vector<int> w(2 * m, 0);
  for (std::size_t j = m; j < 2 * m; ++j) w[j] = 1;
  return w;
}

}  // namespace byzgossip
