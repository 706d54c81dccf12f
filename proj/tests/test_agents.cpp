#include "doctest.h"

#include <cmath>

#include "ctxfer/agents.hpp"

using namespace ctxfer;

namespace {

Transition make_t(int s, int a, double r, int s_next, bool term = false) {
  Transition t;
  t.s.index = s;
  t.action = a;
  t.reward = r;
  t.s_next.index = s_next;
  t.terminal = term;
  return t;
}

State feat_state(std::vector<double> f) {
  State s;
  s.features = std::move(f);
  return s;
}

}  // namespace

TEST_CASE("tabular update matches the hand-computed Watkins step") {
  QTable q(3, 2, 0.5, 0.9);
  q.at(1, 0) = 2.0;
  q.at(1, 1) = 5.0;
  q.at(0, 1) = 1.0;
  q.update(make_t(0, 1, -0.25, 1));
  // y = -0.25 + 0.9 * max(2, 5) = 4.25; q := 1 + 0.5 * (4.25 - 1) = 2.625
  CHECK(q.at(0, 1) == doctest::Approx(2.625).epsilon(1e-15));
}

TEST_CASE("terminal transitions do not bootstrap") {
  QTable q(3, 2, 1.0, 0.9);
  q.at(2, 0) = 100.0;  // must be ignored
  q.update(make_t(0, 0, 0.7, 2, /*term=*/true));
  CHECK(q.at(0, 0) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("the TD hook overrides reward and bootstrap action") {
  QTable q(3, 2, 1.0, 0.5);
  q.at(1, 0) = 8.0;  // greedy pick
  q.at(1, 1) = 3.0;
  TdHook hook = [](const Transition&, std::span<const double>) {
    return TdAdjust{2.0, 1};  // force the non-greedy action
  };
  q.update(make_t(0, 0, -1.0, 1), hook);
  CHECK(q.at(0, 0) == doctest::Approx(2.0 + 0.5 * 3.0).epsilon(1e-15));
}

TEST_CASE("epsilon-greedy endpoints and tie handling") {
  std::vector<double> row{1.0, 4.0, 4.0, 0.0};
  RngStream r(3, streams::agent);
  for (int i = 0; i < 50; ++i) CHECK(epsilon_greedy(row, 0.0, r) == 1);  // ties lowest
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) counts[size_t(epsilon_greedy(row, 1.0, r))]++;
  for (int a = 0; a < 4; ++a) CHECK(std::fabs(counts[size_t(a)] / 40000.0 - 0.25) < 0.02);
}

TEST_CASE("dqn refuses to train on an underfull buffer") {
  RngStream init(1, streams::init);
  DqnAgent agent({2, 8, 2}, 1e-3, 0.0, 0.99, 32, 500, init);
  ReplayBuffer buf(100, 7);
  for (int i = 0; i < 31; ++i) {
    Transition t;
    t.s = feat_state({0.1, 0.2});
    t.s_next = feat_state({0.1, 0.2});
    buf.push(t);
  }
  std::vector<double> before(agent.online().num_params());
  for (size_t i = 0; i < before.size(); ++i) before[i] = agent.online().get_param(i);
  RngStream sr(2, streams::agent);
  CHECK_FALSE(agent.train_step(buf, sr).has_value());
  CHECK(agent.batches() == 0);
  for (size_t i = 0; i < before.size(); ++i)
    CHECK(agent.online().get_param(i) == before[i]);
}

TEST_CASE("dqn hard-syncs the target exactly every sync_every batches") {
  RngStream init(5, streams::init);
  DqnAgent agent({2, 6, 2}, 1e-2, 0.0, 0.9, 4, 3, init);
  ReplayBuffer buf(64, 11);
  RngStream env(4, streams::env);
  for (int i = 0; i < 64; ++i) {
    Transition t;
    t.s = feat_state({env.uniform(-1, 1), env.uniform(-1, 1)});
    t.action = int(env.uniform_int(2));
    t.reward = env.uniform();
    t.s_next = feat_state({env.uniform(-1, 1), env.uniform(-1, 1)});
    t.terminal = env.uniform() < 0.3;
    buf.push(t);
  }
  RngStream sr(9, streams::agent);
  auto nets_equal = [&] {
    State probe = feat_state({0.37, -0.4});
    const auto a = agent.q_values(probe);
    const auto b = agent.q_values_target(probe);
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return false;
    return true;
  };
  CHECK(nets_equal());  // fresh agent starts synced
  CHECK(agent.train_step(buf, sr).has_value());
  CHECK_FALSE(nets_equal());  // online moved, target stale
  agent.train_step(buf, sr);
  agent.train_step(buf, sr);  // third batch triggers the copy
  CHECK(nets_equal());
  agent.train_step(buf, sr);
  CHECK_FALSE(nets_equal());
}

TEST_CASE("dqn regresses terminal rewards") {
  RngStream init(8, streams::init);
  DqnAgent agent({1, 16, 2}, 3e-3, 0.0, 0.9, 8, 1000, init);
  ReplayBuffer buf(32, 3);
  // terminal-only data: the target is just the reward, a plain regression
  for (int i = 0; i < 32; ++i) {
    Transition t;
    const double x = -1.0 + 2.0 * i / 31.0;
    t.s = feat_state({x});
    t.action = i % 2;
    t.reward = t.action == 0 ? x : -x;
    t.s_next = feat_state({0.0});
    t.terminal = true;
    buf.push(t);
  }
  RngStream sr(6, streams::agent);
  double first = *agent.train_step(buf, sr);
  double last = first;
  for (int i = 0; i < 1500; ++i) last = *agent.train_step(buf, sr);
  CHECK(last < first * 0.01);
  const auto q = agent.q_values(feat_state({0.8}));
  CHECK(std::fabs(q[0] - 0.8) < 0.05);
  CHECK(std::fabs(q[1] + 0.8) < 0.05);
}

TEST_CASE("dqn training is deterministic for a fixed seed") {
  auto run = [] {
    RngStream init(21, streams::init);
    DqnAgent agent({2, 10, 3}, 1e-3, 1e-6, 0.95, 8, 50, init);
    ReplayBuffer buf(128, 13);
    RngStream env(2, streams::env);
    for (int i = 0; i < 100; ++i) {
      Transition t;
      t.s = feat_state({env.uniform(-1, 1), env.uniform(-1, 1)});
      t.action = int(env.uniform_int(3));
      t.reward = env.uniform(-1, 1);
      t.s_next = feat_state({env.uniform(-1, 1), env.uniform(-1, 1)});
      t.terminal = env.uniform() < 0.1;
      buf.push(t);
    }
    RngStream sr(17, streams::agent);
    for (int i = 0; i < 200; ++i) agent.train_step(buf, sr);
    return agent.q_values(feat_state({0.123, -0.456}));
  };
  const auto a = run();
  const auto b = run();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
