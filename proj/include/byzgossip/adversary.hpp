#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "byzgossip/aggregate.hpp"
#include "byzgossip/network.hpp"

namespace byzgossip {

enum class AttackKind { None, ALIE, FOE, Dissensus, SpectralHeterogeneity, TwoWorld };

std::string_view to_string(AttackKind k) noexcept;
AttackKind attack_from_string(std::string_view s);

/// Candidate attack scalings. With `normalize`, candidate g applied to target i
/// means zeta_i = g / max(||a_i||, 1e-12), i.e. g is a distance.
struct ScalingGrid {
  std::vector<double> values;
  bool normalize = true;
};

/// {0, 0.25, 0.5, 1, 2, 4, 8}, normalized.
ScalingGrid default_grid();

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  /// Fixed zeta (raw multiplier of a_i) or a grid searched each round.
  std::variant<double, ScalingGrid> scaling = default_grid();
  bool centered_on_target = true;
  /// Search zeta per target instead of one shared value per round.
  bool per_target_search = false;
  /// TwoWorld: world label per honest row. Each target is told that the
  /// Byzantine neighbors hold the mean of its own world. Empty means every
  /// target forms its own world.
  std::vector<int> worlds;
};

/// Ground truth handed to the adversary each round.
struct OmniscientView {
  const Network* network = nullptr;
  ParamMatrix x;
  Eigen::VectorXd mean;

  const Topology& topology() const { return network->topology; }
  const Eigen::MatrixXd& w_honest() const { return network->w_honest; }
  const Eigen::VectorXd& fiedler() const { return network->honest_spectrum.fiedler; }
};

OmniscientView make_view(const Network& net, const ParamMatrix& x);

/// Attack directions, one row per honest target.
Eigen::MatrixXd alie_direction(const OmniscientView& v);
Eigen::MatrixXd foe_direction(const OmniscientView& v);
Eigen::MatrixXd dissensus_direction(const OmniscientView& v);
Eigen::MatrixXd sph_direction(const OmniscientView& v);
/// World mean minus own value (TwoWorld declares exactly the world mean).
Eigen::MatrixXd two_world_direction(const OmniscientView& v, const std::vector<int>& worlds);
/// Dispatch; zero matrix for None.
Eigen::MatrixXd attack_direction(const OmniscientView& v, const AttackSpec& spec);

/// W (I - eta W)^{2s}: s = 0 gives the Dissensus operator, large s approaches
/// a multiple of the Fiedler projector.
Eigen::MatrixXd lookahead_operator(const Eigen::MatrixXd& w, double eta, int s);

/// Per-target zeta_i from a direction matrix and a candidate value.
Eigen::VectorXd target_scalings(const Eigen::MatrixXd& directions, double candidate, bool normalize);

/// Colluding Byzantine messages: every Byzantine neighbor of target i declares
/// x_i + zeta_i a_i (centered) or mean + zeta_i a_i (legacy). TwoWorld ignores zeta.
ForgedMessages forge_messages(const OmniscientView& v, const AttackSpec& spec, const Eigen::MatrixXd& directions,
                              const Eigen::VectorXd& zeta);

/// Damage of a candidate round: maps (pre-round X, post-round X) to a score.
using DamageMetric = std::function<double(const ParamMatrix& before, const ParamMatrix& after)>;

/// Honest MSE of the post-round parameters to the pre-round honest mean.
double mse_damage(const ParamMatrix& before, const ParamMatrix& after);

struct ScalingChoice {
  double candidate = 0.0;     // chosen grid value (or fixed zeta)
  Eigen::VectorXd zeta;       // per-target multipliers actually applied
  double damage = 0.0;
};

/// Grid element maximizing `damage` after one simulated round on a scratch
/// copy; ties go to the smaller value. With per_target_search each target's
/// value is then refined independently starting from the shared winner.
ScalingChoice search_scaling(const OmniscientView& v, const AttackSpec& spec, const RuleConfig& rule,
                             const DamageMetric& damage = mse_damage);

struct ForgedRound {
  ForgedMessages messages;
  ScalingChoice scaling;
  double direction_norm = 0.0;  // max_i ||a_i||
};

/// Directions, scaling resolution, and forging in one go.
ForgedRound forge_round(const OmniscientView& v, const AttackSpec& spec, const RuleConfig& rule,
                        const DamageMetric& damage = mse_damage);

/// Clique labels of the honest part of three_clique_ghb(m, b).
std::vector<int> ghb_worlds(std::size_t m);

}  // namespace byzgossip
