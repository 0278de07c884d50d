#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "byzgossip/aggregate.hpp"
#include "byzgossip/error.hpp"
#include "byzgossip/graph.hpp"
#include "byzgossip/spectral.hpp"
#include "helpers.hpp"

using namespace byzgossip;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double a : v) x(i++, 0) = a;
  return x;
}

Inbox honest_inbox(const Topology& t, const ParamMatrix& x) {
  return assemble_inbox(t, x, ForgedMessages(t.honest_count()));
}

}  // namespace

TEST_CASE("radial clipping") {
  Eigen::VectorXd v(2);
  v << 3, 4;
  CHECK(clip(v, 10) == v);
  const Eigen::VectorXd c = clip(v, 2.5);
  CHECK(c[0] == doctest::Approx(1.5));
  CHECK(c[1] == doctest::Approx(2.0));
  CHECK(clip(Eigen::VectorXd::Zero(2), 0.0).norm() == 0.0);
  CHECK_THROWS_AS(clip(v, -1.0), Error);
}

TEST_CASE("threshold picks the (b+1)-th largest distance") {
  const std::vector<double> d{5, 3, 1, 4};
  CHECK(cgplus_threshold(d, 1) == 4.0);
  CHECK(cgplus_threshold(d, 0) == 5.0);
  CHECK(cgplus_threshold(d, 4) == 0.0);
  CHECK(cgplus_threshold({}, 0) == 0.0);
}

TEST_CASE("threshold agrees with a full sort") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> small(0, 4);
  for (std::size_t size = 1; size <= 8; ++size)
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> d(size);
      // small integer pool forces many ties
      for (double& v : d) v = small(rng);
      std::vector<double> sorted = d;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      for (std::size_t b = 0; b < size + 2; ++b)
        CHECK(cgplus_threshold(d, b) == (b < size ? sorted[b] : 0.0));
    }
}

TEST_CASE("plain gossip on a three-node path") {
  const Topology p = path_graph(3);
  const ParamMatrix x = column({0, 1, 2});
  const ParamMatrix y = plain_gossip_round(p, x, honest_inbox(p, x), 1.0 / 3.0);
  CHECK(y(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(y(1, 0) == doctest::Approx(1.0));
  CHECK(y(2, 0) == doctest::Approx(5.0 / 3.0));
  const ParamMatrix c = cgplus_round(p, x, honest_inbox(p, x), RuleConfig{Rule::CGPlus, 0, 1.0 / 3.0});
  const ParamMatrix n = nna_round(p, x, honest_inbox(p, x), RuleConfig{Rule::NNA, 0, 1.0 / 3.0});
  CHECK((c - y).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((n - y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("robust rules reduce to plain gossip without Byzantine nodes and b = 0") {
  std::mt19937_64 rng(11);
  const Topology t = two_clique_bridge(5, 2);
  const double eta = 1.0 / spectral_info(laplacian(t)).mu_max;
  const ParamMatrix x = testutil::random_matrix(rng, 10, 3);
  const Inbox in = honest_inbox(t, x);
  const ParamMatrix g = plain_gossip_round(t, x, in, eta);
  CHECK((g - (x - eta * laplacian(t) * x)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((cgplus_round(t, x, in, {Rule::CGPlus, 0, eta}) - g).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((nna_round(t, x, in, {Rule::NNA, 0, eta}) - g).cwiseAbs().maxCoeff() <= 1e-12);

  const ParamMatrix constant = ParamMatrix::Constant(10, 3, 2.5);
  CHECK(plain_gossip_round(t, constant, honest_inbox(t, constant), eta) == constant);
}

TEST_CASE("unanimous neighborhoods are fixed points") {
  const Topology t = testutil::complete_with_byzantine(4, 2);
  std::mt19937_64 rng(5);
  const ParamMatrix x = testutil::random_matrix(rng, 4, 2);
  // every neighbor, Byzantine included, declares the receiver's own value
  ParamMatrix same = ParamMatrix::Constant(4, 2, 1.0);
  ForgedMessages f(4);
  for (std::size_t r = 0; r < 4; ++r)
    for (NodeId j : {4, 5}) f[r].push_back(Message{j, same.row(static_cast<Eigen::Index>(r)).transpose()});
  const Inbox in = assemble_inbox(t, same, f);
  CHECK(cgplus_round(t, same, in, {Rule::CGPlus, 2, 0.1}) == same);
  CHECK(nna_round(t, same, in, {Rule::NNA, 2, 0.1}) == same);
  (void)x;
}

TEST_CASE("NNA drops the furthest neighbors, lower sender id first on ties") {
  // star: centre 0 with leaves 1, 2, 3
  const Topology star(4, {{0, 1}, {0, 2}, {0, 3}});
  const ParamMatrix x = column({0, 5, 4, 1});
  const ParamMatrix y = nna_round(star, x, honest_inbox(star, x), {Rule::NNA, 2, 0.1});
  CHECK(y(0, 0) == doctest::Approx(0.1));

  const ParamMatrix tie = column({0, 2, 2, -2});
  RoundStats stats;
  const ParamMatrix z = nna_round(star, tie, honest_inbox(star, tie), {Rule::NNA, 1, 0.1}, &stats);
  // all distances are 2; sender 1 goes first, leaving (2 - 2) from senders 2 and 3
  CHECK(z(0, 0) == doctest::Approx(0.0));
  CHECK(stats.clipped >= 1);

  const ParamMatrix w = nna_round(star, tie, honest_inbox(star, tie), {Rule::NNA, 3, 0.1});
  CHECK(w(0, 0) == 0.0);  // every neighbor dropped

  RuleConfig per_node{Rule::NNA, 1, 0.1, true};
  const ParamMatrix v = nna_round(star, x, honest_inbox(star, x), per_node);
  // degree 3, b = 1: step 1/3 on the two nearest (1 and 4)
  CHECK(v(0, 0) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("oracle threshold uses the honest labels") {
  // honest path 0-1 plus a Byzantine node attached to 0
  const Topology t(3, {{0, 1}, {0, 2}}, {2});
  const ParamMatrix x = column({0, 3});
  ForgedMessages f(2);
  f[0].push_back(Message{2, Eigen::VectorXd::Constant(1, 10.0)});
  const Inbox in = assemble_inbox(t, x, f);
  const RuleConfig cfg{Rule::ClippedGossipOracle, 1, 0.25};
  const ParamMatrix y = clippedgossip_oracle_round(t, x, in, cfg);
  // tau_0 = sqrt(9 / ((2 - 1) * 1)) = 3: both differences clip to 3
  CHECK(y(0, 0) == doctest::Approx(0.25 * 6.0));
  CHECK(y == clippedgossip_oracle_round(t, x, in, cfg));

  const ParamMatrix eq = column({1, 1});
  ForgedMessages g(2);
  g[0].push_back(Message{2, Eigen::VectorXd::Constant(1, 50.0)});
  CHECK(clippedgossip_oracle_round(t, eq, assemble_inbox(t, eq, g), cfg) == eq);
  CHECK_THROWS_AS(clippedgossip_oracle_round(t, x, in, {Rule::ClippedGossipOracle, 0, 0.25}), Error);
}

TEST_CASE("inbox assembly enforces the message protocol") {
  const Topology t = testutil::complete_with_byzantine(3, 1);
  const ParamMatrix x = column({0, 1, 2});
  ForgedMessages ok(3);
  for (std::size_t r = 0; r < 3; ++r) ok[r].push_back(Message{3, Eigen::VectorXd::Constant(1, 9.0)});
  const Inbox in = assemble_inbox(t, x, ok);
  CHECK(in.entry_count() == 9);  // sum of honest degrees
  CHECK(in.rows[1][0].value == x.row(0).transpose());

  ForgedMessages missing(3);
  CHECK_THROWS_AS(assemble_inbox(t, x, missing), Error);
  ForgedMessages dup = ok;
  dup[0].push_back(dup[0][0]);
  CHECK_THROWS_AS(assemble_inbox(t, x, dup), Error);
  ForgedMessages honest_sender = ok;
  honest_sender[0][0].sender = 1;
  CHECK_THROWS_AS(assemble_inbox(t, x, honest_sender), Error);
  ForgedMessages nonedge = ok;
  const Topology sparse(4, {{0, 1}, {1, 2}, {2, 3}}, {3});
  CHECK_THROWS_AS(assemble_inbox(sparse, x, nonedge), Error);

  Inbox tampered = in;
  tampered.rows[1][0].value[0] += 1.0;
  CHECK_THROWS_AS(validate_inbox(t, x, tampered), Error);
  try {
    validate_inbox(t, x, tampered);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ProtocolViolation);
  }
  CHECK(honest_inbox(path_graph(3), x).entry_count() == 4);
}

TEST_CASE("step size is checked against the full graph") {
  const Topology t = complete_graph(4);
  CHECK_NOTHROW(make_rule_config(Rule::CGPlus, 0, 0.25, t));
  CHECK_THROWS_AS(make_rule_config(Rule::CGPlus, 0, 0.3, t), Error);
  CHECK_NOTHROW(make_rule_config(Rule::CGPlus, 0, 0.3, t, true));
  CHECK_THROWS_AS(make_rule_config(Rule::CGPlus, 0, 0.0, t), Error);
  CHECK(rule_from_string("NNA") == Rule::NNA);
  CHECK_THROWS_AS(rule_from_string("Median"), Error);
}

TEST_CASE("laplacian energy equals the pair sum") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const Topology t = two_clique_bridge(3 + rep % 4, 1 + rep % 3);
    const Eigen::MatrixXd w = laplacian(t);
    const ParamMatrix x = testutil::random_matrix(rng, w.rows(), 4);
    double pair = 0.0;
    for (const Edge& e : t.edges()) pair += (x.row(static_cast<Eigen::Index>(e.u)) - x.row(static_cast<Eigen::Index>(e.v))).squaredNorm();
    const double quad = laplacian_energy(x, w);
    CHECK(std::abs(quad - pair) <= 1e-10 * pair);
    CHECK(std::abs(pairwise_energy(x, w) - pair) <= 1e-10 * pair);
  }
}

TEST_CASE("exact gossip has no error term") {
  std::mt19937_64 rng(2);
  const Topology t = two_clique_bridge(4, 2);
  const double eta = 1.0 / spectral_info(laplacian(t)).mu_max;
  const ParamMatrix x = testutil::random_matrix(rng, 8, 2);
  const ParamMatrix y = plain_gossip_round(t, x, honest_inbox(t, x), eta);
  const ErrorTermReport r = extract_error_term(x, y, eta, laplacian(t), 0);
  CHECK(r.norm_sq <= 1e-20);
  CHECK(to_json(r)["E"].size() == 8);
}

// The per-node technical inequality sum_{i<=k}(a_i - a_k) + b a_k <= sum_{i<=b+1} a_i
// fails for b >= 2; the weaker form with a factor b on the right does hold.
TEST_CASE("clipping error per node: counterexample and the weaker bound") {
  auto err = [](const std::vector<double>& a, std::size_t k, std::size_t b) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += a[i] - a[k - 1];
    return s + static_cast<double>(b) * a[k - 1];
  };
  auto head = [](const std::vector<double>& a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n && i < a.size(); ++i) s += a[i];
    return s;
  };
  const std::vector<double> spike{1, 0, 0, 0, 0};
  CHECK(err(spike, 1, 3) == 3.0);
  CHECK(head(spike, 4) == 1.0);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> a(8);
    for (double& v : a) v = u(rng);
    std::sort(a.begin(), a.end(), std::greater<>());
    for (std::size_t b = 0; b + 1 <= a.size(); ++b)
      for (std::size_t k = 1; k <= b + 1; ++k) {
        if (b <= 1) CHECK(err(a, k, b) <= head(a, b + 1) + 1e-12);
        CHECK(err(a, k, b) <= std::max<double>(1.0, static_cast<double>(b)) * head(a, b + 1) + 1e-12);
      }
  }
}

TEST_CASE("global CG+ error term can exceed 2(b+1) ||X||_W^2") {
  // honest K10, three Byzantine nodes each linked to every honest node
  const Topology t = testutil::complete_with_byzantine(10, 3);
  REQUIRE(verify_gamma_membership(t, 8.0, 3).member);
  const double eta = 1.0 / 13.0;
  ParamMatrix x = ParamMatrix::Zero(10, 1);
  x(0, 0) = 1.0;
  ForgedMessages f(10);
  for (std::size_t r = 0; r < 10; ++r)
    for (NodeId j : {10, 11, 12}) {
      const double value = r == 0 ? x(0, 0) : x(static_cast<Eigen::Index>(r), 0) + 1.0;
      f[r].push_back(Message{j, Eigen::VectorXd::Constant(1, value)});
    }
  const ParamMatrix y = cgplus_round(t, x, assemble_inbox(t, x, f), make_rule_config(Rule::CGPlus, 3, eta, t));
  const ErrorTermReport r = extract_error_term(x, y, eta, laplacian(complete_graph(10)), 3);
  CHECK(r.pairwise_energy == doctest::Approx(9.0));
  CHECK(r.bound_cgplus == doctest::Approx(72.0));
  CHECK(r.norm_sq == doctest::Approx(81.0));
  CHECK(r.norm_sq > r.bound_cgplus);
  // the b^2 constant covers it
  CHECK(r.norm_sq <= 2.0 * 9.0 * r.pairwise_energy);
}
