#include <doctest.h>

#include <random>

#include "byzgossip/error.hpp"
#include "byzgossip/graph.hpp"
#include "byzgossip/metrics.hpp"
#include "helpers.hpp"

using namespace byzgossip;

TEST_CASE("honest variance") {
  ParamMatrix x(2, 1);
  x << 0, 2;
  CHECK(var_h(x) == doctest::Approx(1.0));
  CHECK(var_h(ParamMatrix::Constant(4, 3, 7.0)) == 0.0);
  CHECK_THROWS_AS(var_h(ParamMatrix(0, 2)), Error);

  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const ParamMatrix y = testutil::random_matrix(rng, 2 + rep % 9, 1 + rep % 4, 3.0);
    const double v = var_h(y);
    CHECK(std::abs(var_h_projection(y) - v) <= 1e-12 * v);
    const Eigen::RowVectorXd shift = Eigen::RowVectorXd::Constant(y.cols(), 100.0);
    CHECK(var_h(y.rowwise() + shift) == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("measured robustness ratio") {
  ParamMatrix x(3, 2);
  x << 0, 1, 2, 3, 4, -1;
  CHECK(alpha_measured(x, x) == doctest::Approx(1.0));
  const ParamMatrix consensus = x.colwise().mean().replicate(3, 1);
  CHECK(alpha_measured(x, consensus) == doctest::Approx(0.0));
  CHECK(mean_shift_sq(x, consensus) == doctest::Approx(0.0));
  CHECK_THROWS_AS(alpha_measured(consensus, x), Error);
}

TEST_CASE("closed-form bounds") {
  const SpectralInfo k10 = spectral_info(laplacian(complete_graph(10)));
  const BoundSet s = bounds_for(Rule::CGPlus, k10, 0, 0.1);
  CHECK(s.feasible);
  CHECK(s.alpha_bound == doctest::Approx(1.0 - 8.0 / 10.0));
  CHECK(s.lambda_bound == doctest::Approx(0.2));
  CHECK(s.delta == doctest::Approx(0.2));
  // at eta = 1/mu_max the asymptotic factor takes its delta/gamma form
  CHECK(s.asymptotic_bias_factor == doctest::Approx(4.0 * 0.2 / (1.0 * 0.8 * 0.8)));

  const BoundSet edge = bounds_for(Rule::CGPlus, k10, 4, 0.1);
  CHECK(edge.feasible);
  CHECK(edge.alpha_bound == doctest::Approx(1.0));

  const BoundSet nna = bounds_for(Rule::NNA, k10, 2, 0.1);
  CHECK_FALSE(nna.feasible);
  CHECK(nna.note.find("8b") != std::string::npos);
  CHECK(bounds_for(Rule::NNA, k10, 1, 0.1).alpha_bound == doctest::Approx(0.8));

  CHECK_FALSE(bounds_for(Rule::PlainGossip, k10, 1, 0.1).feasible);
  CHECK(bounds_for(Rule::PlainGossip, k10, 0, 0.1).alpha_bound == doctest::Approx(0.0));
  CHECK_FALSE(bounds_for(Rule::ClippedGossipOracle, k10, 1, 0.1).feasible);
  CHECK_FALSE(bounds_for(Rule::CGPlus, k10, 0, 0.2).feasible);  // eta above 1/mu_max
  const SpectralInfo split = spectral_info(laplacian(Topology(4, {{0, 1}, {2, 3}})));
  CHECK_FALSE(bounds_for(Rule::CGPlus, split, 0, 0.1).feasible);
  CHECK(to_json(s)["feasible"] == true);
}

TEST_CASE("asymptotic bias bound dominates the partial sums") {
  for (std::size_t n = 6; n <= 20; n += 2)
    for (std::size_t b = 0; 2 * (b + 1) < n; ++b)
      for (double u : {0.3, 0.7, 1.0}) {
        const SpectralInfo s = spectral_info(laplacian(complete_graph(n)));
        const BoundSet bs = bounds_for(Rule::CGPlus, s, b, u / s.mu_max);
        REQUIRE(bs.feasible);
        double prev = 0.0;
        for (std::size_t t = 0; t <= 300; t += 7) {
          const double c = bs.cumulative_bias(t, 2.0);
          CHECK(c >= prev);
          CHECK(c * c <= bs.asymptotic_bias_bound(2.0) + 1e-12);
          prev = c;
        }
      }
}

TEST_CASE("chain check") {
  const SpectralInfo k10 = spectral_info(laplacian(complete_graph(10)));
  const BoundSet s = bounds_for(Rule::CGPlus, k10, 1, 0.1);  // alpha 0.4, lambda 0.4
  std::vector<ChainSample> good{{1.0, 0.0, 0.0, 0.0}, {0.35, 0.3, 0.38, 0.09}, {0.12, 0.4, 0.13, 0.01}};
  CHECK(check_chain(good, s, true).total() == 0);

  std::vector<ChainSample> bad = good;
  bad[1].step_spread = 0.7;
  bad[1].var_h = 0.7;
  const ViolationReport r = check_chain(bad, s, true);
  CHECK(r.one_step_alpha == 1);
  CHECK(r.chained_variance == 1);
  CHECK(to_json(r)["failing_rounds"].size() == 1);

  const ViolationReport skipped = check_chain(bad, s, false);
  CHECK(skipped.skipped);
  CHECK(skipped.total() == 0);
  CHECK(check_chain(bad, bounds_for(Rule::NNA, k10, 2, 0.1), true).skipped);
}
