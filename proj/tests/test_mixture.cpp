#include "doctest.h"

#include <cmath>

#include "ctxfer/mixture.hpp"
#include "fd_check.hpp"
#include "test_util.hpp"

using namespace ctxfer;

namespace {

State idx_state(int i, int n) {
  State s;
  s.index = i;
  s.features = one_hot(i, n);
  return s;
}

Encoder identity_encoder() {
  return [](const State& s) { return s.features; };
}

// three continuous sources whose zero-param delta nets predict "no change";
// distinct nu values give distinct likelihood profiles
std::vector<SourceTask> continuous_sources(int n, int feat_dim, int num_actions) {
  std::vector<SourceTask> out;
  RngStream r(33, streams::init);
  for (int i = 0; i < n; ++i) {
    SourceTask t;
    t.name = "s" + std::to_string(i);
    t.policy = std::make_unique<UniformPolicy>(num_actions);
    MlpDyn m;
    m.net = Mlp({feat_dim + num_actions, 6, feat_dim}, Head::linear, 0.0, r);
    m.num_actions = num_actions;
    t.dyn = std::move(m);
    t.nu = 2.0 + 3.0 * i;  // gentle kernels so likelihoods stay informative
    out.push_back(std::move(t));
  }
  return out;
}

// support-pattern world: 5 one-hot states, dynamics f(s,a) = (s+a+1) % 5;
// source i predicts f exactly on states where it is "competent" and f+1
// elsewhere, so the correct posterior support is known per state
struct SupportWorld {
  std::vector<SourceTask> sources;
  std::vector<std::vector<int>> support;  // per state, competent source ids

  SupportWorld() {
    support = {{0}, {0, 1}, {1, 2}, {2}, {0, 1, 2}};
    const int S = 5, A = 3;
    for (int i = 0; i < 3; ++i) {
      SourceTask t;
      t.name = "src" + std::to_string(i);
      t.policy = std::make_unique<UniformPolicy>(A);
      TabularDyn d(S, A);
      for (int s = 0; s < S; ++s) {
        const bool competent =
            std::find(support[size_t(s)].begin(), support[size_t(s)].end(), i) !=
            support[size_t(s)].end();
        for (int a = 0; a < A; ++a) {
          const int f = (s + a + 1) % S;
          d.observe(s, a, competent ? f : (f + 1) % S);
        }
      }
      t.dyn = std::move(d);
      sources.push_back(std::move(t));
    }
  }

  std::vector<Transition> sample(int n, RngStream& rng) const {
    std::vector<Transition> out;
    for (int k = 0; k < n; ++k) {
      const int s = int(rng.uniform_int(5));
      const int a = int(rng.uniform_int(3));
      Transition t;
      t.s = idx_state(s, 5);
      t.action = a;
      t.s_next = idx_state((s + a + 1) % 5, 5);
      out.push_back(t);
    }
    return out;
  }
};

}  // namespace

TEST_CASE("predictive density and NLL match hand values") {
  std::vector<double> lik{0.5, 0.25};
  std::vector<double> gate{0.5, 0.5};
  CHECK(MixtureNet::predictive_density(lik, gate) == doctest::Approx(0.375).epsilon(1e-15));

  // a gate net with zero params outputs the uniform gate
  RngStream r(1, streams::init);
  MixtureOptions opt;
  opt.continuous = true;
  MixtureNet mix({2, 2}, opt, identity_encoder(), r);
  for (size_t i = 0; i < mix.net().num_params(); ++i) mix.net().set_param(i, 0.0);

  auto srcs = continuous_sources(2, 2, 2);
  Transition t;
  t.s.features = {0.1, -0.2};
  t.action = 1;
  t.s_next.features = {0.15, -0.1};
  const auto L = mix.likelihoods(t, srcs);
  const double expect = -std::log(0.5 * L[0] + 0.5 * L[1]);
  CHECK(mix.nll({t}, srcs) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("posterior is exact Bayes and flags zero evidence") {
  std::vector<double> gate{0.5, 0.5};
  auto p = MixtureNet::posterior(std::vector<double>{0.8, 0.2}, gate);
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.2).epsilon(1e-15));

  // flat likelihoods leave the prior untouched
  auto q = MixtureNet::posterior(std::vector<double>{0.7, 0.7},
                                 std::vector<double>{0.3, 0.7});
  CHECK(q[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(0.7).epsilon(1e-15));

  CHECK(ctxfer::testing::throws_with<std::runtime_error>(
      [&] {
        MixtureNet::posterior(std::vector<double>{0.0, 0.0}, gate);
      },
      "zero-evidence"));
}

TEST_CASE("posterior equals brute-force Bayes over random draws") {
  RngStream r(42, streams::eval);
  for (int k = 0; k < 500; ++k) {
    const int n = 2 + int(r.uniform_int(4));
    std::vector<double> lik(static_cast<size_t>(n));
    std::vector<double> gate(static_cast<size_t>(n));
    double gs = 0.0;
    for (int i = 0; i < n; ++i) {
      lik[size_t(i)] = r.uniform();
      gate[size_t(i)] = 0.01 + r.uniform();
      gs += gate[size_t(i)];
    }
    for (auto& g : gate) g /= gs;
    const auto p = MixtureNet::posterior(lik, gate);
    // independent brute force: unnormalized joint, then divide by its sum
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += lik[size_t(i)] * gate[size_t(i)];
    double psum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(std::fabs(p[size_t(i)] - lik[size_t(i)] * gate[size_t(i)] / z) < 1e-15);
      psum += p[size_t(i)];
    }
    CHECK(std::fabs(psum - 1.0) < 1e-12);
  }
}

TEST_CASE("the two gradient routes agree to numerical precision") {
  RngStream r(9, streams::init);
  MixtureOptions opt;
  opt.continuous = true;
  opt.l2 = 1e-4;
  MixtureNet mix({3, 8, 3}, opt, identity_encoder(), r);
  auto srcs = continuous_sources(3, 3, 2);

  RngStream dr(4, streams::pretrain);
  std::vector<Transition> batch;
  for (int i = 0; i < 16; ++i) {
    Transition t;
    t.s.features = {dr.uniform(-1, 1), dr.uniform(-1, 1), dr.uniform(-1, 1)};
    t.action = int(dr.uniform_int(2));
    t.s_next.features = {t.s.features[0] + dr.uniform(-0.3, 0.3),
                         t.s.features[1] + dr.uniform(-0.3, 0.3),
                         t.s.features[2] + dr.uniform(-0.3, 0.3)};
    batch.push_back(t);
  }
  const auto ga = ctxfer::testing::flatten(mix.grad_via_posterior(batch, srcs));
  const auto gb = ctxfer::testing::flatten(mix.grad_via_backprop(batch, srcs));
  REQUIRE(ga.size() == gb.size());
  double md = 0.0;
  for (size_t i = 0; i < ga.size(); ++i) md = std::max(md, std::fabs(ga[i] - gb[i]));
  CHECK(md <= 1e-10);
}

TEST_CASE("analytic mixture gradient matches finite differences") {
  RngStream r(21, streams::init);
  MixtureOptions opt;
  opt.continuous = true;
  opt.l2 = 1e-4;
  MixtureNet mix({2, 6, 3}, opt, identity_encoder(), r);
  auto srcs = continuous_sources(3, 2, 2);

  RngStream dr(8, streams::pretrain);
  std::vector<Transition> batch;
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.s.features = {dr.uniform(-1, 1), dr.uniform(-1, 1)};
    t.action = int(dr.uniform_int(2));
    t.s_next.features = {t.s.features[0] + dr.uniform(-0.4, 0.4),
                         t.s.features[1] + dr.uniform(-0.4, 0.4)};
    batch.push_back(t);
  }
  auto loss = [&] {
    double l2 = 0.0;
    const auto& sz = mix.net().sizes();
    size_t idx = 0;
    for (size_t layer = 0; layer + 1 < sz.size(); ++layer) {
      const size_t nw = size_t(sz[layer]) * size_t(sz[layer + 1]);
      for (size_t k = 0; k < nw; ++k) {
        const double w = mix.net().get_param(idx + k);
        l2 += w * w;
      }
      idx += nw + size_t(sz[layer + 1]);  // skip biases
    }
    return mix.nll(batch, srcs) + opt.l2 * l2;
  };
  const auto fd = ctxfer::testing::fd_grad(mix.net(), loss);
  const auto an = ctxfer::testing::flatten(mix.grad_via_posterior(batch, srcs));
  CHECK(ctxfer::testing::max_rel_err(fd, an) < 1e-6);
}

TEST_CASE("zero-evidence samples are skipped and counted, not trained on") {
  RngStream r(2, streams::init);
  MixtureOptions opt;  // tabular mode: no floor
  MixtureNet mix({5, 3}, opt, identity_encoder(), r);
  SupportWorld w;

  // a transition no source predicts: s'=s is never f or f+1 here
  Transition bogus;
  bogus.s = idx_state(0, 5);
  bogus.action = 0;
  bogus.s_next = idx_state(0, 5);
  for (const auto& src : w.sources) CHECK(src.likelihood(bogus) == 0.0);

  RngStream sr(6, streams::pretrain);
  auto batch = w.sample(6, sr);
  batch.push_back(bogus);
  batch.push_back(bogus);

  CHECK(mix.nll(batch, w.sources) > 0.0);
  mix.train_step(batch, w.sources);
  CHECK(mix.zero_evidence_skipped() == 2);

  // an all-bogus batch must leave the params untouched
  std::vector<double> before(mix.net().num_params());
  for (size_t i = 0; i < before.size(); ++i) before[i] = mix.net().get_param(i);
  mix.train_step({bogus, bogus, bogus}, w.sources);
  CHECK(mix.zero_evidence_skipped() == 5);
  for (size_t i = 0; i < before.size(); ++i)
    CHECK(mix.net().get_param(i) == before[i]);
}

TEST_CASE("training identifies per-state support: singletons exactly, faces by mass") {
  RngStream r(17, streams::init);
  MixtureOptions opt;
  opt.lr = 1e-2;
  opt.epochs = 1;
  MixtureNet mix({5, 3}, opt, identity_encoder(), r);
  SupportWorld w;

  RngStream sr(23, streams::mixture);
  for (int it = 0; it < 3000; ++it) mix.train_step(w.sample(32, sr), w.sources);

  for (int s = 0; s < 5; ++s) {
    const auto a = mix.gate(idx_state(s, 5));
    double mass = 0.0;
    for (int i : w.support[size_t(s)]) mass += a[size_t(i)];
    CHECK(mass >= 0.95);  // all gate weight on competent sources
    if (w.support[size_t(s)].size() == 1) {
      // singleton support: brute-force Bayes fixes the whole gate vector
      CHECK(a[size_t(w.support[size_t(s)][0])] >= 0.95);
    }
  }

  // trained gate posterior still matches single-step brute-force Bayes
  RngStream er(3, streams::eval);
  auto probe = w.sample(50, er);
  for (const auto& t : probe) {
    const auto lik = mix.likelihoods(t, w.sources);
    const auto gate = mix.gate(t.s);
    const auto p = MixtureNet::posterior(lik, gate);
    double z = 0.0;
    for (size_t i = 0; i < 3; ++i) z += lik[i] * gate[i];
    for (size_t i = 0; i < 3; ++i)
      CHECK(std::fabs(p[i] - lik[i] * gate[i] / z) < 1e-14);
  }
}

TEST_CASE("train_step reduces NLL on a fixed batch") {
  RngStream r(5, streams::init);
  MixtureOptions opt;
  opt.lr = 5e-3;
  opt.epochs = 4;
  MixtureNet mix({5, 4, 3}, opt, identity_encoder(), r);
  SupportWorld w;
  RngStream sr(14, streams::mixture);
  const auto batch = w.sample(64, sr);
  const double first = mix.nll(batch, w.sources);
  double ret = 0.0;
  for (int i = 0; i < 50; ++i) ret = mix.train_step(batch, w.sources);
  CHECK(ret < first);
  CHECK(mix.nll(batch, w.sources) < ret);
}
