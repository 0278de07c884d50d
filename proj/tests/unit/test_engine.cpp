#include <doctest.h>

#include <cmath>
#include <memory>

#include "byzgossip/engine.hpp"
#include "byzgossip/error.hpp"
#include "byzgossip/rng.hpp"
#include "helpers.hpp"

using namespace byzgossip;

namespace {

std::shared_ptr<const Network> net_of(Topology t) { return std::make_shared<const Network>(Network::build(std::move(t))); }

RunConfig mean_config(std::shared_ptr<const Network> net, Rule rule, std::size_t b, AttackKind attack, std::size_t rounds) {
  RunConfig c;
  c.network = std::move(net);
  c.rule = rule;
  c.b = b;
  c.attack.kind = attack;
  c.task.kind = TaskKind::MeanEstimation;
  c.task.dim = 3;
  c.rounds = rounds;
  c.seed = 21;
  c.monitor = MonitorMode::Abort;
  return c;
}

bool same_trace(const RunTrace& a, const RunTrace& b) {
  if (a.rows.size() != b.rows.size() || a.final_x != b.final_x) return false;
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const RoundRecord& x = a.rows[k];
    const RoundRecord& y = b.rows[k];
    if (x.var_h != y.var_h || x.bias_drift != y.bias_drift || x.grad_norm_sq != y.grad_norm_sq ||
        x.error_norm_sq != y.error_norm_sq || x.clipped != y.clipped || x.zeta != y.zeta)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero rounds record only the initial state") {
  const RunTrace t = mean_estimation_run(mean_config(net_of(complete_graph(5)), Rule::PlainGossip, 0, AttackKind::None, 0));
  CHECK(t.rows.size() == 1);
  CHECK(t.rows[0].round == 0);
  CHECK(t.rows[0].bias_drift == 0.0);
  CHECK(t.final_x == Simulation::prepare(mean_config(net_of(complete_graph(5)), Rule::PlainGossip, 0, AttackKind::None, 0)).task().targets);
}

TEST_CASE("plain gossip contracts at rate 1 - eta mu2") {
  const auto net = net_of(two_clique_bridge(6, 2));
  const RunTrace t = mean_estimation_run(mean_config(net, Rule::PlainGossip, 0, AttackKind::None, 60));
  const double eta = t.header.eta;
  const double rate = 1.0 - eta * net->honest_spectrum.mu2;
  for (std::size_t k = 0; k < t.rows.size(); ++k)
    CHECK(t.rows[k].var_h <= std::pow(rate, static_cast<double>(k)) * t.rows[0].var_h + 1e-12);
  CHECK(t.rows.back().bias_drift < 1e-12);
  CHECK(check_run(t).total() == 0);
}

TEST_CASE("CG+ without an attack never increases the variance") {
  const auto net = net_of(attach_byzantine(complete_graph(12), 2, 1));
  const RunTrace t = mean_estimation_run(mean_config(net, Rule::CGPlus, 1, AttackKind::None, 40));
  CHECK(t.header.preconditions);
  for (std::size_t k = 1; k < t.rows.size(); ++k) CHECK(t.rows[k].var_h <= t.rows[k - 1].var_h + 1e-12);
  CHECK(t.monitor_violations == 0);
  CHECK(check_run(t).total() == 0);
}

TEST_CASE("attacked CG+ runs satisfy the monitored bounds") {
  const auto net = net_of(attach_byzantine(complete_graph(14), 3, 2));
  for (AttackKind a : {AttackKind::ALIE, AttackKind::FOE, AttackKind::Dissensus, AttackKind::SpectralHeterogeneity}) {
    RunConfig c = mean_config(net, Rule::CGPlus, 2, a, 25);
    c.monitor = MonitorMode::Record;
    const RunTrace t = mean_estimation_run(c);
    CHECK(t.monitor_violations == 0);
    CHECK(check_run(t).total() == 0);
  }
}

TEST_CASE("runs are bit-reproducible and the attack enters only through the inbox") {
  const auto net = net_of(attach_byzantine(two_clique_bridge(6, 3), 2, 2));
  RunConfig c = mean_config(net, Rule::CGPlus, 2, AttackKind::Dissensus, 20);
  c.monitor = MonitorMode::Record;
  CHECK(same_trace(mean_estimation_run(c), mean_estimation_run(c)));

  // with None the Byzantine nodes echo each receiver, which equals gossip on the honest part plus self terms
  RunConfig none = c;
  none.attack.kind = AttackKind::None;
  const RunTrace a = mean_estimation_run(none);
  CHECK(same_trace(a, mean_estimation_run(none)));
  CHECK_FALSE(same_trace(a, mean_estimation_run(c)));
  for (const RoundRecord& r : a.rows) CHECK(r.zeta == 0.0);
}

TEST_CASE("momentum gradient descent on a single node") {
  RunConfig c;
  c.network = net_of(complete_graph(1));
  c.rule = Rule::PlainGossip;
  c.task.kind = TaskKind::QuadraticSum;
  c.task.dim = 2;
  c.task.targets = Eigen::MatrixXd::Constant(1, 2, 3.0);
  c.task.init = 0.0;
  c.rho = 0.1;
  c.beta = 0.5;
  c.rounds = 30;
  c.seed = 4;
  const RunTrace t = dsgd_run(c);
  double x = 0.0, m = 0.0;
  for (int k = 0; k < 30; ++k) {
    m = 0.5 * m + 0.5 * (x - 3.0);
    x -= 0.1 * m;
  }
  CHECK(t.final_x(0, 0) == doctest::Approx(x).epsilon(1e-14));
  CHECK(t.final_x(0, 1) == t.final_x(0, 0));
  CHECK(same_trace(t, dsgd_run(c)));
}

TEST_CASE("D-SGD on a complete graph contracts toward the target mean") {
  RunConfig c;
  c.network = net_of(complete_graph(8));
  c.rule = Rule::CGPlus;
  c.task.kind = TaskKind::QuadraticSum;
  c.task.dim = 2;
  c.task.spread = 2.0;
  c.task.init = 5.0;
  c.rho = 0.2;
  c.beta = 0.0;
  c.rounds = 200;
  c.seed = 6;
  const Simulation sim = Simulation::prepare(c);
  const Eigen::RowVectorXd ybar = sim.task().targets.colwise().mean();
  const RunTrace t = sim.run();
  CHECK((t.final_x.rowwise() - ybar).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(t.rows.back().grad_norm_sq < 1e-10);
}

TEST_CASE("gradient oracle") {
  TaskSpec spec;
  spec.kind = TaskKind::QuadraticSum;
  spec.dim = 3;
  spec.noise_sigma = 0.0;
  spec.targets = Eigen::MatrixXd::Constant(2, 3, 1.5);
  const Task task = make_task(spec, 2, 1);
  std::mt19937_64 rng(0);
  CHECK(gradient_oracle(task, 0, Eigen::VectorXd::Constant(3, 1.5), rng).norm() == 0.0);
  CHECK(gradient_oracle(task, 1, Eigen::VectorXd::Constant(3, 2.5), rng) == Eigen::VectorXd::Constant(3, 1.0));
  CHECK(task.smoothness == 1.0);
  CHECK(task.heterogeneity_sq == 0.0);

  spec.noise_sigma = 0.7;
  const Task noisy = make_task(spec, 2, 1);
  const int draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, -1.0);
  for (int k = 0; k < draws; ++k) sum += gradient_oracle(noisy, 0, x, rng) - exact_gradient(noisy, 0, x);
  CHECK((sum / draws).cwiseAbs().maxCoeff() <= 3.0 * 0.7 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("quadratic task constants and logistic smoothness") {
  TaskSpec spec;
  spec.kind = TaskKind::QuadraticSum;
  spec.dim = 1;
  spec.curvature = 2.0;
  Eigen::MatrixXd y(2, 1);
  y << 0, 2;
  spec.targets = y;
  const Task q = make_task(spec, 2, 3);
  CHECK(q.smoothness == 2.0);
  CHECK(q.heterogeneity_sq == doctest::Approx(4.0));

  TaskSpec ls;
  ls.kind = TaskKind::LogisticSynthetic;
  ls.dim = 3;
  const Task l = make_task(ls, 4, 3);
  REQUIRE(l.features.size() == 4);
  // gradient Lipschitz check along random segments
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd a = testutil::random_matrix(rng, 3, 1, 2.0);
    const Eigen::VectorXd b = testutil::random_matrix(rng, 3, 1, 2.0);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK((exact_gradient(l, i, a) - exact_gradient(l, i, b)).norm() <= l.smoothness * (a - b).norm() + 1e-12);
  }
  CHECK(l.heterogeneity_sq > 0.0);
}

TEST_CASE("configuration errors surface in prepare") {
  const auto net = net_of(attach_byzantine(complete_graph(6), 2, 1));
  auto expect_config = [](const RunConfig& c) {
    try {
      Simulation::prepare(c);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  };
  RunConfig base = mean_config(net, Rule::CGPlus, 1, AttackKind::FOE, 5);
  CHECK_NOTHROW(Simulation::prepare(base));

  RunConfig c = base;
  c.network.reset();
  expect_config(c);
  c = base;
  c.beta = 1.0;
  expect_config(c);
  c = base;
  c.eta = 1.0;
  expect_config(c);
  c = base;
  c.comm_rounds_per_step.value = 2;
  expect_config(c);
  c = base;
  c.attack.scaling = ScalingGrid{{}, true};
  expect_config(c);
  c = base;
  c.attack.kind = AttackKind::TwoWorld;
  c.attack.worlds = {0, 1};
  expect_config(c);
  c = mean_config(net_of(attach_byzantine(Topology(4, {{0, 1}, {2, 3}}), 1, 1)), Rule::CGPlus, 1,
                  AttackKind::SpectralHeterogeneity, 3);
  expect_config(c);
  CHECK_THROWS_AS(dsgd_run(base), Error);
}

TEST_CASE("automatic communication rounds") {
  CHECK(auto_comm_rounds(0.5, 0.0) == 5);  // ln 10 / 0.5 = 4.6
  CHECK_THROWS_AS(auto_comm_rounds(0.5, 1.0), Error);
  RunConfig c;
  c.network = net_of(attach_byzantine(two_clique_bridge(13, 8), 6, 6));
  c.b = 6;
  c.task.kind = TaskKind::QuadraticSum;
  c.task.dim = 2;
  c.rounds = 1;
  c.comm_rounds_per_step.automatic = true;
  const Simulation sim = Simulation::prepare(c);
  const double gamma = sim.header().honest_spectrum.gamma;
  const double delta = 14.0 / 16.0;
  CHECK(sim.header().comm_rounds_per_step ==
        static_cast<std::size_t>(std::ceil(std::log(10.0) / (gamma * (1.0 - delta)))));
  CHECK(sim.header().comm_rounds_per_step == 29);
}

TEST_CASE("an oversized step disables the bound checks") {
  RunConfig c = mean_config(net_of(complete_graph(5)), Rule::PlainGossip, 0, AttackKind::None, 3);
  c.eta = 0.5;
  c.allow_large_eta = true;
  const RunTrace t = mean_estimation_run(c);
  CHECK_FALSE(t.header.preconditions);
  CHECK(check_run(t).skipped);
  CHECK(to_string(MonitorMode::Abort) == "abort");
  CHECK(monitor_from_string("off") == MonitorMode::Off);
  CHECK_THROWS_AS(monitor_from_string("strict"), Error);
}

TEST_CASE("random streams are keyed, not sequential") {
  std::mt19937_64 a = make_stream(5, StreamPurpose::GradientNoise, 3, 7);
  std::mt19937_64 b = make_stream(5, StreamPurpose::GradientNoise, 3, 7);
  std::mt19937_64 c = make_stream(5, StreamPurpose::GradientNoise, 3, 8);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
}
