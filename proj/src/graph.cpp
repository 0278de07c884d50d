#include "byzgossip/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "byzgossip/error.hpp"
#include "byzgossip/rng.hpp"
#include "byzgossip/spectral.hpp"

namespace byzgossip {

Topology::Topology(std::size_t n, std::vector<Edge> edges, std::vector<NodeId> byzantine)
    : edges_(std::move(edges)), adjacency_(n), byzantine_mask_(n, false) {
  for (const Edge& e : edges_) {
    if (e.u == e.v) fail(ErrorKind::InvalidArgument, "self-loop on node " + std::to_string(e.u));
    if (e.v >= n) fail(ErrorKind::InvalidArgument, "edge endpoint " + std::to_string(e.v) + " out of range");
  }
  std::sort(edges_.begin(), edges_.end());
  if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end()) {
    fail(ErrorKind::InvalidArgument,
         "duplicate edge " + std::to_string(dup->u) + " " + std::to_string(dup->v));
  }
  for (const Edge& e : edges_) {
    adjacency_[e.u].push_back(e.v);
    adjacency_[e.v].push_back(e.u);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());

  for (NodeId b : byzantine) {
    if (b >= n) fail(ErrorKind::InvalidArgument, "byzantine node " + std::to_string(b) + " out of range");
    byzantine_mask_[b] = true;
  }
  honest_row_.assign(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    if (byzantine_mask_[i]) {
      byzantine_.push_back(i);
    } else {
      honest_row_[i] = honest_.size();
      honest_.push_back(i);
    }
  }
}

bool Topology::has_edge(NodeId a, NodeId b) const {
  if (a >= size() || b >= size()) return false;
  const auto& list = adjacency_[a];
  return std::binary_search(list.begin(), list.end(), b);
}

std::optional<std::size_t> Topology::honest_index(NodeId i) const {
  if (i >= size() || byzantine_mask_[i]) return std::nullopt;
  return honest_row_[i];
}

std::size_t Topology::byzantine_neighbor_count(NodeId i) const {
  const auto& list = adjacency_.at(i);
  return static_cast<std::size_t>(
      std::count_if(list.begin(), list.end(), [&](NodeId j) { return byzantine_mask_[j]; }));
}

std::size_t Topology::max_byzantine_neighbors() const {
  std::size_t worst = 0;
  for (NodeId i : honest_) worst = std::max(worst, byzantine_neighbor_count(i));
  return worst;
}

Topology Topology::with_byzantine(std::vector<NodeId> byzantine) const {
  return Topology(size(), edges_, std::move(byzantine));
}

HonestSubgraph honest_subgraph(const Topology& t) {
  HonestSubgraph out;
  out.new_to_old.assign(t.honest().begin(), t.honest().end());
  out.old_to_new.assign(t.size(), std::nullopt);
  for (std::size_t k = 0; k < out.new_to_old.size(); ++k) out.old_to_new[out.new_to_old[k]] = k;
  std::vector<Edge> edges;
  for (const Edge& e : t.edges()) {
    if (out.old_to_new[e.u] && out.old_to_new[e.v]) edges.emplace_back(*out.old_to_new[e.u], *out.old_to_new[e.v]);
  }
  out.graph = Topology(out.new_to_old.size(), std::move(edges));
  return out;
}

Eigen::MatrixXd laplacian(const Topology& t) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : t.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    w(u, v) = -1.0;
    w(v, u) = -1.0;
    w(u, u) += 1.0;
    w(v, v) += 1.0;
  }
  return w;
}

Topology complete_graph(std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "complete_graph needs n >= 1");
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Topology(n, std::move(edges));
}

Topology path_graph(std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "path_graph needs n >= 1");
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Topology(n, std::move(edges));
}

namespace {

void add_clique(std::vector<Edge>& edges, NodeId offset, std::size_t m) {
  for (NodeId i = 0; i < m; ++i)
    for (NodeId j = i + 1; j < m; ++j) edges.emplace_back(offset + i, offset + j);
}

// node j of clique `from` -> nodes j..j+k-1 (mod m) of clique `to`
void add_circular_links(std::vector<Edge>& edges, NodeId from, NodeId to, std::size_t m, std::size_t k) {
  for (NodeId j = 0; j < m; ++j)
    for (std::size_t q = 0; q < k; ++q) edges.emplace_back(from + j, to + (j + q) % m);
}

}  // namespace

Topology two_clique_bridge(std::size_t m, std::size_t k) {
  if (m == 0) fail(ErrorKind::InvalidArgument, "two_clique_bridge needs m >= 1");
  if (k < 1 || k > m) fail(ErrorKind::InvalidArgument, "two_clique_bridge needs 1 <= k <= m");
  std::vector<Edge> edges;
  add_clique(edges, 0, m);
  add_clique(edges, m, m);
  add_circular_links(edges, 0, m, m, k);
  return Topology(2 * m, std::move(edges));
}

Topology three_clique_ghb(std::size_t m, std::size_t b) {
  if (m == 0) fail(ErrorKind::InvalidArgument, "three_clique_ghb needs m >= 1");
  if (b < 1 || b > m) fail(ErrorKind::InvalidArgument, "three_clique_ghb needs 1 <= b <= m");
  std::vector<Edge> edges;
  for (std::size_t c = 0; c < 3; ++c) add_clique(edges, c * m, m);
  for (std::size_t c = 0; c < 3; ++c) add_circular_links(edges, c * m, ((c + 1) % 3) * m, m, b);
  std::vector<NodeId> byz(m);
  for (NodeId j = 0; j < m; ++j) byz[j] = 2 * m + j;
  return Topology(3 * m, std::move(edges), std::move(byz));
}

Topology attach_byzantine(const Topology& t, std::size_t count, std::size_t per_node) {
  if (per_node > count) fail(ErrorKind::InvalidArgument, "per_node exceeds Byzantine node count");
  const std::size_t n = t.size();
  std::vector<Edge> edges(t.edges().begin(), t.edges().end());
  std::vector<NodeId> byz(t.byzantine().begin(), t.byzantine().end());
  for (std::size_t k = 0; k < count; ++k) byz.push_back(n + k);
  const auto honest = t.honest();
  for (std::size_t r = 0; r < honest.size(); ++r)
    for (std::size_t q = 0; q < per_node; ++q) edges.emplace_back(honest[r], n + (r + q) % count);
  return Topology(n + count, std::move(edges), std::move(byz));
}

GammaReport verify_gamma_membership(const Topology& t, double mu_min, std::size_t b) {
  GammaReport r;
  const auto h = honest_subgraph(t);
  if (h.graph.size() > 0) {
    const SpectralInfo s = spectral_info(laplacian(h.graph));
    r.honest_connected = s.kernel_dim == 1;
    r.mu2 = r.honest_connected ? s.mu2 : 0.0;
  }
  r.max_byzantine_neighbors = t.max_byzantine_neighbors();
  // eigenvalues carry solver round-off; integer-valued mu_min sits exactly on the boundary
  const bool spectral_ok = r.mu2 >= mu_min - 1e-9 * std::max(1.0, mu_min);
  const bool local_ok = r.max_byzantine_neighbors <= b;
  r.member = spectral_ok && local_ok;
  if (!spectral_ok) {
    std::ostringstream os;
    os << "mu2(G_H) = " << r.mu2 << " < mu_min = " << mu_min;
    if (!r.honest_connected) os << " (honest subgraph disconnected)";
    r.failing = os.str();
  } else if (!local_ok) {
    r.failing = "max Byzantine neighbors " + std::to_string(r.max_byzantine_neighbors) + " > b = " +
                std::to_string(b);
  }
  return r;
}

GammaSample sample_gamma_graph(const GammaGraphParams& p, std::uint64_t seed) {
  const double byz_p = p.byz_edge_prob.value_or(p.edge_prob);
  if (!(p.edge_prob > 0.0 && p.edge_prob <= 1.0) || !(byz_p > 0.0 && byz_p <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "edge probabilities must lie in (0, 1]");
  }
  if (p.n_honest == 0) fail(ErrorKind::InvalidArgument, "n_honest must be positive");
  auto rng = make_stream(seed, StreamPurpose::GraphSample);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = p.n_honest + p.n_byz;
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const bool i_h = i < p.n_honest;
      const bool j_h = j < p.n_honest;
      if (!i_h && !j_h) continue;  // Byzantine-Byzantine links carry nothing
      const double prob = (i_h && j_h) ? p.edge_prob : byz_p;
      if (unit(rng) < prob) edges.emplace_back(i, j);
    }
  }
  std::vector<NodeId> byz;
  for (std::size_t k = 0; k < p.n_byz; ++k) byz.push_back(p.n_honest + k);
  Topology t(n, std::move(edges), std::move(byz));
  GammaSample out;
  out.report = verify_gamma_membership(t, p.mu_min, p.b);
  if (out.report.member) out.topology = std::move(t);
  return out;
}

Topology random_gamma_graph(const GammaGraphParams& p, std::uint64_t seed) {
  std::map<std::string, std::size_t> reasons;
  std::string last;
  for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
    auto s = sample_gamma_graph(p, mix64(seed + attempt));
    if (s.topology) return std::move(*s.topology);
    last = s.report.failing;
    // bucket by criterion, not by the measured value
    ++reasons[last.rfind("mu2", 0) == 0 ? "algebraic connectivity" : "Byzantine neighbor bound"];
  }
  std::string summary;
  for (const auto& [k, v] : reasons) summary += " " + k + " x" + std::to_string(v) + ";";
  fail(ErrorKind::Exhausted, "no class member in " + std::to_string(p.max_attempts) + " draws, unmet:" + summary +
                                 " last: " + last);
}

Topology parse_edge_list(std::istream& in, const std::string& source) {
  std::vector<Edge> edges;
  std::vector<NodeId> byz;
  std::optional<std::size_t> declared_nodes;
  std::size_t max_id = 0;
  bool any = false;
  std::string line;
  std::size_t lineno = 0;
  auto parse_fail = [&](const std::string& what) {
    fail(ErrorKind::Parse, source + ":" + std::to_string(lineno) + ": " + what);
  };
  auto parse_id = [&](const std::string& tok) -> NodeId {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      if (tok.empty() || tok[0] == '-') throw std::invalid_argument(tok);
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      parse_fail("expected a node id, got '" + tok + "'");
    }
    if (pos != tok.size()) parse_fail("expected a node id, got '" + tok + "'");
    return static_cast<NodeId>(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "byzantine:" || first == "nodes:") {
      std::string rest;
      std::getline(ls, rest);
      std::replace(rest.begin(), rest.end(), ',', ' ');
      std::istringstream rs(rest);
      std::string tok;
      if (first == "nodes:") {
        if (!(rs >> tok)) parse_fail("missing node count");
        declared_nodes = parse_id(tok);
        if (rs >> tok) parse_fail("trailing tokens after node count");
      } else {
        while (rs >> tok) byz.push_back(parse_id(tok));
      }
      continue;
    }
    std::string second, extra;
    if (!(ls >> second)) parse_fail("edge line needs two node ids");
    if (ls >> extra) parse_fail("edge line has more than two tokens");
    const NodeId u = parse_id(first);
    const NodeId v = parse_id(second);
    if (u == v) parse_fail("self-loop");
    edges.emplace_back(u, v);
    max_id = std::max({max_id, u, v});
    any = true;
  }
  for (NodeId b : byz) max_id = std::max(max_id, b), any = true;
  std::size_t n = any ? max_id + 1 : 0;
  if (declared_nodes) {
    if (*declared_nodes < n) fail(ErrorKind::Parse, source + ": node id exceeds declared node count");
    n = *declared_nodes;
  }
  try {
    return Topology(n, std::move(edges), std::move(byz));
  } catch (const Error& e) {
    fail(ErrorKind::Parse, source + ": " + e.what());
  }
}

Topology read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Parse, "cannot open graph file " + path);
  return parse_edge_list(in, path);
}

void write_edge_list(std::ostream& out, const Topology& t) {
  out << "nodes: " << t.size() << '\n';
  if (!t.byzantine().empty()) {
    out << "byzantine: ";
    for (std::size_t k = 0; k < t.byzantine().size(); ++k) out << (k ? "," : "") << t.byzantine()[k];
    out << '\n';
  }
  for (const Edge& e : t.edges()) out << e.u << ' ' << e.v << '\n';
}

}  // namespace byzgossip
