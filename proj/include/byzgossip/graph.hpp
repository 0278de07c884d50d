#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace byzgossip {

using NodeId = std::size_t;

/// Unordered node pair, stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  Edge() = default;
  Edge(NodeId a, NodeId b) : u(a < b ? a : b), v(a < b ? b : a) {}

  auto operator<=>(const Edge&) const = default;
};

/// Undirected communication graph with an honest/Byzantine labeling.
///
/// Immutable after construction. Neighbor lists are sorted by node id, which
/// fixes the reduction order of every aggregation rule.
class Topology {
 public:
  Topology() = default;
  Topology(std::size_t n, std::vector<Edge> edges, std::vector<NodeId> byzantine = {});

  std::size_t size() const noexcept { return adjacency_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const NodeId> neighbors(NodeId i) const { return adjacency_.at(i); }
  std::size_t degree(NodeId i) const { return adjacency_.at(i).size(); }
  bool has_edge(NodeId a, NodeId b) const;

  bool is_byzantine(NodeId i) const { return byzantine_mask_.at(i); }
  std::span<const NodeId> byzantine() const noexcept { return byzantine_; }
  std::span<const NodeId> honest() const noexcept { return honest_; }
  std::size_t honest_count() const noexcept { return honest_.size(); }

  /// Row of node `i` in honest-indexed matrices, or nullopt for Byzantine nodes.
  std::optional<std::size_t> honest_index(NodeId i) const;

  std::size_t byzantine_neighbor_count(NodeId i) const;
  std::size_t max_byzantine_neighbors() const;

  /// Same graph, different labeling.
  Topology with_byzantine(std::vector<NodeId> byzantine) const;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<bool> byzantine_mask_;
  std::vector<NodeId> byzantine_;
  std::vector<NodeId> honest_;
  std::vector<std::size_t> honest_row_;
};

struct HonestSubgraph {
  Topology graph;
  std::vector<NodeId> new_to_old;
  std::vector<std::optional<NodeId>> old_to_new;
};

/// Induced subgraph on the honest nodes, relabeled in increasing id order.
HonestSubgraph honest_subgraph(const Topology& t);

/// W = D - A with integer-valued entries.
Eigen::MatrixXd laplacian(const Topology& t);

Topology complete_graph(std::size_t n);
Topology path_graph(std::size_t n);

/// Two m-cliques; node j of the first links to nodes j..j+k-1 (mod m) of the second.
Topology two_clique_bridge(std::size_t m, std::size_t k);

/// Three m-cliques, each node linked to b nodes of each other clique in
/// circular order. The third clique is Byzantine; the honest part is
/// exactly two_clique_bridge(m, b) with the same labels.
Topology three_clique_ghb(std::size_t m, std::size_t b);

/// Appends `count` Byzantine nodes; honest node with honest rank r links to the
/// Byzantine nodes r, r+1, ..., r+per_node-1 (mod count).
Topology attach_byzantine(const Topology& t, std::size_t count, std::size_t per_node);

struct GammaReport {
  bool member = false;
  double mu2 = 0.0;
  std::size_t max_byzantine_neighbors = 0;
  bool honest_connected = false;
  /// Empty when `member`, else names the unmet criterion.
  std::string failing;
};

/// Membership in the class of graphs whose honest subgraph has algebraic
/// connectivity >= mu_min and where no honest node has more than b Byzantine neighbors.
GammaReport verify_gamma_membership(const Topology& t, double mu_min, std::size_t b);

struct GammaGraphParams {
  std::size_t n_honest = 0;
  std::size_t n_byz = 0;
  double edge_prob = 1.0;
  /// Honest-Byzantine link probability; defaults to edge_prob.
  std::optional<double> byz_edge_prob;
  double mu_min = 0.0;
  std::size_t b = 0;
  std::size_t max_attempts = 1000;
};

struct GammaSample {
  std::optional<Topology> topology;
  GammaReport report;
};

/// One Erdos-Renyi draw (honest nodes 0..n_honest-1, Byzantine after), kept only if it is a class member.
GammaSample sample_gamma_graph(const GammaGraphParams& params, std::uint64_t seed);

/// Rejection sampler over seed-derived draws; throws Exhausted after max_attempts.
Topology random_gamma_graph(const GammaGraphParams& params, std::uint64_t seed);

/// Edge-list text: optional `nodes: N` and `byzantine: i,j,k` header lines,
/// then one `u v` pair per line. `#` starts a comment.
Topology parse_edge_list(std::istream& in, const std::string& source = "<input>");
Topology read_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const Topology& t);

}  // namespace byzgossip
