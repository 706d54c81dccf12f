#include "doctest.h"

#include <cmath>

#include "ctxfer/nn.hpp"
#include "fd_check.hpp"
#include "test_util.hpp"

using namespace ctxfer;

namespace {

std::vector<double> random_vec(RngStream& r, int n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = r.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("forward shapes and simplex property of softmax head") {
  RngStream r(1, streams::init);
  Mlp net({5, 8, 3}, Head::softmax, 0.0, r);
  auto x = random_vec(r, 5);
  auto y = net.forward(x);
  REQUIRE(y.size() == 3);
  double sum = 0.0;
  for (double v : y) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax head is shift-invariant in the logits") {
  RngStream r(2, streams::init);
  Mlp net({4, 3}, Head::softmax, 0.0, r);
  auto x = random_vec(r, 4);
  auto y1 = net.forward(x);
  // shifting every output-layer bias by a constant shifts all logits equally
  for (auto& bi : net.b[0]) bi += 37.5;
  auto y2 = net.forward(x);
  for (size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-9));
}

TEST_CASE("glorot init is within the fan-based bound and seeded") {
  RngStream r1(5, streams::init), r2(5, streams::init);
  Mlp a({10, 20, 4}, Head::linear, 0.0, r1), b({10, 20, 4}, Head::linear, 0.0, r2);
  const double lim0 = std::sqrt(6.0 / 30.0), lim1 = std::sqrt(6.0 / 24.0);
  for (double v : a.w[0]) CHECK(std::fabs(v) <= lim0);
  for (double v : a.w[1]) CHECK(std::fabs(v) <= lim1);
  for (double v : a.b[0]) CHECK(v == 0.0);
  CHECK(a.w[0] == b.w[0]);
  CHECK(a.w[1] == b.w[1]);
}

TEST_CASE("dimension mismatch throws") {
  RngStream r(3, streams::init);
  Mlp net({4, 2}, Head::linear, 0.0, r);
  std::vector<double> bad(5, 0.0);
  CHECK(ctxfer::testing::throws_with<std::invalid_argument>(
      [&] { static_cast<void>(net.forward(bad)); }, "dimension-mismatch"));
}

// Gradient correctness for every head type: analytic backward against central
// finite differences of a scalar loss sum(coef .* output).
TEST_CASE("backward matches finite differences for all heads") {
  for (Head head : {Head::linear, Head::softmax, Head::tanh_squash}) {
    CAPTURE(int(head));
    RngStream r(17 + int(head), streams::init);
    Mlp net({6, 9, 7, 4}, head, 0.0, r);
    auto x = random_vec(r, 6);
    auto coef = random_vec(r, 4);

    auto loss = [&]() {
      auto y = net.forward(x);
      double s = 0.0;
      for (size_t i = 0; i < y.size(); ++i) s += coef[i] * y[i];
      return s;
    };
    Mlp::Trace tr;
    net.forward(x, tr);
    GradBuf g = net.make_grad();
    net.backward(tr, coef, g);
    const auto analytic = testing::flatten(g);
    const auto fd = testing::fd_grad(net, loss);
    CHECK(testing::max_rel_err(analytic, fd) < 1e-6);
  }
}

TEST_CASE("backward_logits skips the head jacobian") {
  RngStream r(23, streams::init);
  Mlp net({5, 6, 3}, Head::softmax, 0.0, r);
  auto x = random_vec(r, 5);
  auto coef = random_vec(r, 3);
  // loss defined directly on the pre-head logits
  auto logits_of = [&](Mlp& m) {
    Mlp tmp = m;  // same params, linear head comparison via trace
    Mlp::Trace tr;
    m.forward(x, tr);
    return tr.act.back();
  };
  auto loss = [&]() {
    auto z = logits_of(net);
    double s = 0.0;
    for (size_t i = 0; i < z.size(); ++i) s += coef[i] * z[i];
    return s;
  };
  Mlp::Trace tr;
  net.forward(x, tr);
  GradBuf g = net.make_grad();
  net.backward_logits(tr, coef, g);
  CHECK(testing::max_rel_err(testing::flatten(g), testing::fd_grad(net, loss)) < 1e-6);
}

TEST_CASE("backward is linear in the upstream gradient") {
  RngStream r(29, streams::init);
  Mlp net({4, 5, 3}, Head::linear, 0.0, r);
  auto x = random_vec(r, 4);
  auto g1v = random_vec(r, 3), g2v = random_vec(r, 3);
  Mlp::Trace tr;
  net.forward(x, tr);
  GradBuf a = net.make_grad(), b = net.make_grad(), c = net.make_grad();
  net.backward(tr, g1v, a, false);
  net.backward(tr, g2v, b, false);
  std::vector<double> sumv(3);
  for (int i = 0; i < 3; ++i) sumv[size_t(i)] = g1v[size_t(i)] + g2v[size_t(i)];
  net.backward(tr, sumv, c, false);
  a.add(b);
  const auto lhs = testing::flatten(a), rhs = testing::flatten(c);
  for (size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}

TEST_CASE("zero upstream yields the pure L2 gradient") {
  RngStream r(31, streams::init);
  const double l2 = 1e-3;
  Mlp net({3, 4, 2}, Head::linear, l2, r);
  auto x = random_vec(r, 3);
  Mlp::Trace tr;
  net.forward(x, tr);
  GradBuf g = net.make_grad();
  std::vector<double> zero(2, 0.0);
  net.backward(tr, zero, g, true);
  for (size_t l = 0; l < net.w.size(); ++l) {
    for (size_t i = 0; i < net.w[l].size(); ++i)
      CHECK(g.w[l][i] == doctest::Approx(2.0 * l2 * net.w[l][i]).epsilon(1e-12));
    for (size_t i = 0; i < net.b[l].size(); ++i) CHECK(g.b[l][i] == 0.0);
  }
}

TEST_CASE("adam first step moves params by about lr in the gradient sign direction") {
  RngStream r(37, streams::init);
  Mlp net({2, 2}, Head::linear, 0.0, r);
  AdamState st(0.01);
  GradBuf g = net.make_grad();
  for (auto& v : g.w)
    for (double& x : v) x = 0.7;  // constant positive gradient
  for (auto& v : g.b)
    for (double& x : v) x = -0.3;
  Mlp before = net;
  adam_step(net, st, g);
  // bias-corrected first step: lr * g / (|g| + eps) ~= lr * sign(g)
  for (size_t l = 0; l < net.w.size(); ++l) {
    for (size_t i = 0; i < net.w[l].size(); ++i)
      CHECK(before.w[l][i] - net.w[l][i] == doctest::Approx(0.01).epsilon(1e-5));
    for (size_t i = 0; i < net.b[l].size(); ++i)
      CHECK(net.b[l][i] - before.b[l][i] == doctest::Approx(0.01).epsilon(1e-5));
  }
}

TEST_CASE("adam converges on a tiny least-squares problem") {
  RngStream r(41, streams::init);
  Mlp net({3, 8, 1}, Head::linear, 0.0, r);
  AdamState st(0.01);
  // target: y = 2*x0 - x1 + 0.5*x2
  auto target = [](std::span<const double> x) { return 2.0 * x[0] - x[1] + 0.5 * x[2]; };
  RngStream data(43, streams::init);
  Mlp::Trace tr;
  double last = 1e9;
  for (int it = 0; it < 4000; ++it) {
    GradBuf g = net.make_grad();
    double loss = 0.0;
    for (int k = 0; k < 16; ++k) {
      auto x = random_vec(data, 3);
      const auto& y = net.forward(x, tr);
      const double err = y[0] - target(x);
      loss += err * err / 16.0;
      std::vector<double> dout = {2.0 * err / 16.0};
      net.backward(tr, dout, g, false);
    }
    adam_step(net, st, g);
    last = loss;
  }
  CHECK(last < 1e-3);
}

TEST_CASE("serialize round-trips parameters exactly") {
  RngStream r(47, streams::init);
  Mlp net({4, 6, 3}, Head::tanh_squash, 1e-6, r);
  const std::string js = net.serialize();
  Mlp back = Mlp::deserialize(js);
  CHECK(back.sizes() == net.sizes());
  CHECK(back.head() == net.head());
  CHECK(back.l2() == net.l2());
  CHECK(back.w == net.w);  // exact: shortest round-trip float serialization
  CHECK(back.b == net.b);
  auto x = random_vec(r, 4);
  CHECK(net.forward(x) == back.forward(x));
}

TEST_CASE("argmax ties resolve to the lowest index") {
  std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
  CHECK(argmax_lowest(v) == 1);
  std::vector<double> u = {5.0, 5.0};
  CHECK(argmax_lowest(u) == 0);
}
