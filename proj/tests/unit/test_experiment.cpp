#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "byzgossip/error.hpp"
#include "byzgossip/experiment.hpp"

using namespace byzgossip;
using nlohmann::json;

namespace {

json base_doc() {
  return json::parse(R"({
    "name": "t",
    "topology": {"generator": "complete", "args": [6], "byzantine": {"count": 2, "per_node": "b"}},
    "rule": "CGPlus",
    "b": 1,
    "attack": "FOE",
    "task": {"kind": "MeanEstimation", "dim": 2},
    "rounds": 5,
    "seed": 3
  })");
}

void expect_config_error(const json& doc) {
  try {
    parse_experiment(doc);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

}  // namespace

TEST_CASE("minimal experiment parses with documented defaults") {
  const ExperimentFile e = parse_experiment(base_doc());
  CHECK(e.prefix == "t");
  CHECK(e.beta == 0.9);
  CHECK_FALSE(e.eta.has_value());
  CHECK(e.monitor == MonitorMode::Record);
  CHECK(e.attack.kind == AttackKind::FOE);
  CHECK(std::holds_alternative<ScalingGrid>(e.attack.scaling));
  const auto runs = expand(e);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].stem == "t-000");
  // per_node "b" resolves to the run's b
  CHECK(runs[0].config.network->topology.max_byzantine_neighbors() == 1);
  CHECK(runs[0].config.network->topology.size() == 8);
}

TEST_CASE("strict parsing") {
  json d = base_doc();
  d["colour"] = "red";
  expect_config_error(d);
  d = base_doc();
  d["task"]["dimension"] = 2;
  expect_config_error(d);
  for (const char* key : {"topology", "rule", "rounds", "seed", "task"}) {
    d = base_doc();
    d.erase(key);
    expect_config_error(d);
  }
  d = base_doc();
  d["sweep"] = {{"seed", json::array()}};
  expect_config_error(d);
  d = base_doc();
  d["rule"] = "Median";
  expect_config_error(d);
  d = base_doc();
  d["rounds"] = "many";
  expect_config_error(d);
  d = base_doc();
  d["topology"]["generator"] = "hypercube";
  CHECK_THROWS_AS(expand(parse_experiment(d)), Error);
}

TEST_CASE("attack and scaling forms") {
  json d = base_doc();
  d["attack"] = {{"kind", "Dissensus"}, {"scaling", 0.5}, {"centered", false}, {"per_target", true}};
  ExperimentFile e = parse_experiment(d);
  CHECK(std::get<double>(e.attack.scaling) == 0.5);
  CHECK_FALSE(e.attack.centered_on_target);
  CHECK(e.attack.per_target_search);
  d["attack"] = {{"kind", "ALIE"}, {"scaling", {{"values", {1, 2}}, {"normalize", false}}}};
  e = parse_experiment(d);
  CHECK(std::get<ScalingGrid>(e.attack.scaling).values == std::vector<double>{1, 2});
  d["eta"] = 0.05;
  d["comm_rounds_per_step"] = "auto";
  e = parse_experiment(d);
  CHECK(*e.eta == 0.05);
  CHECK(e.comm_rounds_per_step.automatic);
}

TEST_CASE("clique worlds come from the generator") {
  json d = base_doc();
  d["topology"] = {{"generator", "three_clique_ghb"}, {"args", {3, 1}}};
  d["attack"] = {{"kind", "TwoWorld"}, {"worlds", "cliques"}};
  const auto runs = expand(parse_experiment(d));
  CHECK(runs[0].config.attack.worlds == std::vector<int>{0, 0, 0, 1, 1, 1});
  d["topology"] = {{"generator", "complete"}, {"args", {6}}};
  expect_config_error(d);
}

TEST_CASE("sweep expansion order: b, attack, rule, seed") {
  json d = base_doc();
  d["topology"] = {{"generator", "complete"}, {"args", {12}}, {"byzantine", {{"count", 2}, {"per_node", "b"}}}};
  d["sweep"] = {{"seed", {1, 2}}, {"rule", {"CGPlus", "NNA"}}, {"b", {0, 1}}, {"attack", {"FOE", "ALIE"}}};
  const auto runs = expand(parse_experiment(d));
  REQUIRE(runs.size() == 16);
  CHECK(runs[0].config.b == 0);
  CHECK(runs[15].config.b == 1);
  CHECK(runs[0].config.seed == 1);
  CHECK(runs[1].config.seed == 2);
  CHECK(runs[2].config.rule == Rule::NNA);
  CHECK(runs[4].config.attack.kind == AttackKind::ALIE);
  CHECK(runs[8].config.attack.kind == AttackKind::FOE);
  CHECK(runs[15].stem == "t-015");
  CHECK(runs[8].config.network->topology.max_byzantine_neighbors() == 1);
  CHECK(runs[0].config.network->topology.max_byzantine_neighbors() == 0);
}

TEST_CASE("graph files resolve against the config directory") {
  json d = base_doc();
  d["topology"] = {{"file", "k4_one_byzantine.txt"}};
  d["b"] = 1;
  const auto runs = expand(parse_experiment(d, BYZGOSSIP_FIXTURES));
  CHECK(runs[0].config.network->topology.size() == 4);
}

TEST_CASE("sweeps write traces and a summary; repeated runs are byte-identical") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "byzgossip-unit-sweep";
  fs::remove_all(root);
  json d = base_doc();
  d["sweep"] = {{"rule", {"CGPlus", "NNA"}}};
  const ExperimentFile e = parse_experiment(d);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const SweepReport a = run_experiment(e, SweepOptions{(root / "a").string(), 1});
  const SweepReport b = run_experiment(e, SweepOptions{(root / "b").string(), 2});
  CHECK(a.exit_code == 0);
  REQUIRE(a.runs.size() == 2);
  for (const char* f : {"t-000.csv", "t-001.csv", "t-000.json", "t-summary.csv"}) {
    REQUIRE(fs::exists(root / "a" / f));
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  }
  const SweepReport c = run_experiment(e, SweepOptions{(root / "c").string(), 1, 99, true});
  CHECK(c.runs[0].config.seed == 99);
  CHECK(c.runs[0].config.monitor == MonitorMode::Off);
  fs::remove_all(root);
}
