#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ctxfer/sources.hpp"
#include "test_util.hpp"

using namespace ctxfer;
namespace fs = std::filesystem;

namespace {

Mlp zero_net(std::vector<int> sizes, Head head = Head::linear, double l2 = 0.0) {
  RngStream r(1, streams::init);
  Mlp net(std::move(sizes), head, l2, r);
  for (size_t i = 0; i < net.num_params(); ++i) net.set_param(i, 0.0);
  return net;
}

State feat_state(std::vector<double> f) {
  State s;
  s.features = std::move(f);
  return s;
}

}  // namespace

TEST_CASE("tabular dynamics: identity default, observation, indicator likelihood") {
  TabularDyn d(5, 3);
  CHECK(d.predict(2, 1) == 2);
  CHECK_FALSE(d.visited(2, 1));
  d.observe(2, 1, 4);
  CHECK(d.predict(2, 1) == 4);
  CHECK(d.visited(2, 1));

  SourceTask t;
  t.name = "tab";
  t.policy = std::make_unique<TablePolicy>(std::vector<int>{0, 1, 2, 0, 1});
  t.dyn = std::move(d);
  Transition tr;
  tr.s.index = 2;
  tr.action = 1;
  tr.s_next.index = 4;
  CHECK(t.likelihood(tr) == 1.0);
  tr.s_next.index = 3;
  CHECK(t.likelihood(tr) == 0.0);
}

TEST_CASE("continuous likelihood matches the exp kernel exactly") {
  MlpDyn m;
  m.net = zero_net({6, 4, 2});  // all-zero params -> predicted delta is 0
  m.num_actions = 4;
  SourceTask t;
  t.name = "cont";
  t.policy = std::make_unique<UniformPolicy>(4);
  t.nu = 5e5;
  t.dyn = std::move(m);

  Transition tr;
  tr.s = feat_state({0.3, -0.1});
  tr.action = 2;
  // error vector (sqrt(1/nu), 0) -> likelihood e^{-1}
  tr.s_next = feat_state({0.3 + std::sqrt(1.0 / t.nu), -0.1});
  CHECK(t.likelihood(tr) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  tr.s_next = tr.s;  // exact prediction -> likelihood 1
  CHECK(t.likelihood(tr) == 1.0);
}

TEST_CASE("policies: table lookup, greedy net ties, uniform probabilities") {
  TablePolicy tp({2, 0, 1});
  State s;
  s.index = 1;
  CHECK(tp.act(s) == 0);
  CHECK(tp.action_prob(s, 0) == 1.0);
  CHECK(tp.action_prob(s, 2) == 0.0);
  s.index = 9;
  CHECK(ctxfer::testing::throws_with<std::invalid_argument>(
      [&] { tp.act(s); }, "bad-config"));

  GreedyNetPolicy gp(zero_net({3, 4}));  // all outputs equal -> lowest index
  CHECK(gp.act(feat_state({0.5, -1.0, 2.0})) == 0);

  UniformPolicy up(4);
  CHECK(up.action_prob(feat_state({0.0}), 3) == doctest::Approx(0.25));
}

TEST_CASE("dynamics training: perfect predictor is a fixed point at l2=0") {
  MlpDyn m;
  m.net = zero_net({4, 3, 2});
  m.num_actions = 2;
  std::vector<Transition> batch;
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.s = feat_state({0.1 * i, -0.05 * i});
    t.action = i % 2;
    t.s_next = t.s;  // zero delta everywhere
    batch.push_back(t);
  }
  AdamState opt(1e-3);
  CHECK(dyn_train_step(m, batch, opt) == 0.0);
  for (size_t i = 0; i < m.net.num_params(); ++i) CHECK(m.net.get_param(i) == 0.0);
}

TEST_CASE("dynamics training reduces error on a learnable map") {
  RngStream r(7, streams::init);
  MlpDyn m;
  m.net = Mlp({4, 16, 2}, Head::linear, 0.0, r);
  m.num_actions = 2;
  RngStream data_rng(3, streams::pretrain);
  std::vector<Transition> data;
  for (int i = 0; i < 256; ++i) {
    Transition t;
    t.s = feat_state({data_rng.uniform(-1, 1), data_rng.uniform(-1, 1)});
    t.action = int(data_rng.uniform_int(2));
    // delta depends on state and action: a learnable smooth rule
    const double push = t.action == 0 ? -0.05 : 0.05;
    t.s_next = feat_state(
        {t.s.features[0] + push, t.s.features[1] + 0.1 * t.s.features[0]});
    data.push_back(t);
  }
  AdamState opt(1e-2);
  const double before = dyn_mse(m, data);
  for (int it = 0; it < 600; ++it) dyn_train_step(m, data, opt);
  const double after = dyn_mse(m, data);
  CHECK(after < before);
  CHECK(after < 1e-5);
}

TEST_CASE("bundle round-trip preserves likelihoods and advice exactly") {
  const std::string dir = "test_bundle_rt";
  fs::remove_all(dir);

  std::vector<SourceTask> tasks;
  {
    SourceTask t;
    t.name = "tab-src";
    t.policy = std::make_unique<TablePolicy>(std::vector<int>{1, 3, 0, 2});
    TabularDyn d(4, 4);
    d.observe(0, 1, 3);
    d.observe(2, 2, 1);
    t.dyn = std::move(d);
    tasks.push_back(std::move(t));
  }
  {
    RngStream r(11, streams::init);
    SourceTask t;
    t.name = "net-src";
    t.policy = std::make_unique<GreedyNetPolicy>(Mlp({3, 8, 4}, Head::linear, 0.0, r));
    MlpDyn m;
    m.net = Mlp({7, 10, 3}, Head::linear, 1e-6, r);
    m.num_actions = 4;
    t.dyn = std::move(m);
    t.nu = 5e5;
    tasks.push_back(std::move(t));
  }
  save_sources(dir, tasks);
  auto loaded = load_sources(dir);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "tab-src");
  CHECK(loaded[1].nu == 5e5);

  Transition tr;
  tr.s.index = 0;
  tr.action = 1;
  tr.s_next.index = 3;
  CHECK(loaded[0].likelihood(tr) == tasks[0].likelihood(tr));
  State s;
  s.index = 1;
  CHECK(loaded[0].advised_action(s) == 3);

  Transition cr;
  cr.s = feat_state({0.2, -0.3, 0.05});
  cr.action = 2;
  cr.s_next = feat_state({0.21, -0.29, 0.06});
  CHECK(loaded[1].likelihood(cr) == tasks[1].likelihood(cr));  // bit-exact round trip
  State cs = feat_state({0.4, 0.1, -0.2});
  CHECK(loaded[1].advised_action(cs) == tasks[1].advised_action(cs));

  fs::remove_all(dir);
}

TEST_CASE("bundle loading errors") {
  CHECK(ctxfer::testing::throws_with<std::runtime_error>(
      [] { load_sources("no_such_dir_xyz"); }, "sources-not-found"));

  const std::string dir = "test_bundle_bad";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir + "/manifest.json") << "{\"format_version\": 99, \"sources\": []}";
  CHECK(ctxfer::testing::throws_with<std::runtime_error>(
      [&] { load_sources(dir); }, "bad-config"));
  std::ofstream(dir + "/manifest.json") << "{not json";
  CHECK(ctxfer::testing::throws_with<std::runtime_error>(
      [&] { load_sources(dir); }, "bad-config"));
  fs::remove_all(dir);
}
