#include "ctxfer/verify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace ctxfer {

namespace {

Eigen::MatrixXd policy_kernel(const FiniteMdp& mdp, const std::vector<int>& pi) {
  Eigen::MatrixXd P(mdp.S, mdp.S);
  for (int s = 0; s < mdp.S; ++s)
    for (int t = 0; t < mdp.S; ++t)
      P(s, t) = mdp.P[size_t(s)][size_t(pi[size_t(s)])][size_t(t)];
  return P;
}

}  // namespace

std::vector<double> policy_value(const FiniteMdp& mdp, const std::vector<int>& pi) {
  if (int(pi.size()) != mdp.S)
    throw std::invalid_argument("bad-config: policy size != state count");
  const Eigen::MatrixXd P = policy_kernel(mdp, pi);
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(mdp.S, mdp.S) - mdp.gamma * P;
  Eigen::VectorXd r(mdp.S);
  for (int s = 0; s < mdp.S; ++s) r(s) = mdp.R[size_t(s)];
  const Eigen::VectorXd v = M.partialPivLu().solve(r);
  return {v.data(), v.data() + mdp.S};
}

BoundCheck check_value_bound(const FiniteMdp& truth, const FiniteMdp& model,
                             const std::vector<int>& pi) {
  if (truth.S != model.S || truth.A != model.A || truth.gamma != model.gamma)
    throw std::invalid_argument("bad-config: mismatched MDP shapes");
  const auto v_true = policy_value(truth, pi);
  const auto v_model = policy_value(model, pi);

  BoundCheck out;
  for (int s = 0; s < truth.S; ++s)
    out.lhs = std::max(out.lhs, std::fabs(v_model[size_t(s)] - v_true[size_t(s)]));

  double r_inf = 0.0;
  for (double r : truth.R) r_inf = std::max(r_inf, std::fabs(r));
  double kernel_err = 0.0;  // max abs row sum of the kernel gap under pi
  for (int s = 0; s < truth.S; ++s) {
    double row = 0.0;
    for (int t = 0; t < truth.S; ++t)
      row += std::fabs(model.P[size_t(s)][size_t(pi[size_t(s)])][size_t(t)] -
                       truth.P[size_t(s)][size_t(pi[size_t(s)])][size_t(t)]);
    kernel_err = std::max(kernel_err, row);
  }
  const double g = truth.gamma;
  out.rhs = g / ((1.0 - g) * (1.0 - g)) * r_inf * kernel_err;
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

namespace {

std::vector<SourceTask> random_continuous_sources(int n, int feat_dim,
                                                  int num_actions,
                                                  RngStream& rng) {
  std::vector<SourceTask> out;
  for (int i = 0; i < n; ++i) {
    SourceTask t;
    t.name = "v" + std::to_string(i);
    t.policy = std::make_unique<UniformPolicy>(num_actions);
    MlpDyn m;
    m.net = Mlp({feat_dim + num_actions, 5, feat_dim}, Head::linear, 0.0, rng);
    m.num_actions = num_actions;
    t.dyn = std::move(m);
    t.nu = rng.uniform(0.5, 6.0);
    out.push_back(std::move(t));
  }
  return out;
}

double mixture_loss(const MixtureNet& mix, const std::vector<Transition>& batch,
                    const std::vector<SourceTask>& srcs, double l2) {
  double wsq = 0.0;
  const auto& sz = mix.net().sizes();
  size_t idx = 0;
  for (size_t layer = 0; layer + 1 < sz.size(); ++layer) {
    const size_t nw = size_t(sz[layer]) * size_t(sz[layer + 1]);
    for (size_t k = 0; k < nw; ++k) {
      const double w = mix.net().get_param(idx + k);
      wsq += w * w;
    }
    idx += nw + size_t(sz[layer + 1]);
  }
  return mix.nll(batch, srcs) + l2 * wsq;
}

}  // namespace

SuiteResult suite_gradient_check(int instances, double tol, uint64_t seed) {
  SuiteResult res;
  res.total = instances;
  RngStream rng(seed, streams::init);
  for (int k = 0; k < instances; ++k) {
    const int feat = 2 + int(rng.uniform_int(3));
    const int n_src = 2 + int(rng.uniform_int(3));
    const int n_act = 2 + int(rng.uniform_int(2));
    const int hidden = 4 + int(rng.uniform_int(5));
    const double l2 = rng.uniform() < 0.5 ? 0.0 : 1e-4;

    MixtureOptions opt;
    opt.continuous = true;
    opt.l2 = l2;
    MixtureNet mix({feat, hidden, n_src}, opt,
                   [](const State& s) { return s.features; }, rng);
    auto srcs = random_continuous_sources(n_src, feat, n_act, rng);

    std::vector<Transition> batch;
    const int B = 6 + int(rng.uniform_int(6));
    for (int b = 0; b < B; ++b) {
      Transition t;
      for (int d = 0; d < feat; ++d) t.s.features.push_back(rng.uniform(-1, 1));
      t.action = int(rng.uniform_int(uint64_t(n_act)));
      for (int d = 0; d < feat; ++d)
        t.s_next.features.push_back(t.s.features[size_t(d)] + rng.uniform(-0.3, 0.3));
      batch.push_back(t);
    }

    const GradBuf g = mix.grad_via_posterior(batch, srcs);
    std::vector<double> analytic;
    for (size_t l = 0; l < g.w.size(); ++l) {
      analytic.insert(analytic.end(), g.w[l].begin(), g.w[l].end());
      analytic.insert(analytic.end(), g.b[l].begin(), g.b[l].end());
    }

    const double h = 1e-6;
    double max_err = 0.0;
    for (size_t i = 0; i < mix.net().num_params(); ++i) {
      const double p0 = mix.net().get_param(i);
      mix.net().set_param(i, p0 + h);
      const double up = mixture_loss(mix, batch, srcs, l2);
      mix.net().set_param(i, p0 - h);
      const double dn = mixture_loss(mix, batch, srcs, l2);
      mix.net().set_param(i, p0);
      const double fd = (up - dn) / (2.0 * h);
      const double scale = std::max({1.0, std::fabs(fd), std::fabs(analytic[i])});
      max_err = std::max(max_err, std::fabs(fd - analytic[i]) / scale);
    }
    res.worst = std::max(res.worst, max_err);
    if (max_err > tol) ++res.failed;
  }
  return res;
}

SuiteResult suite_posterior_check(int draws, double tol, uint64_t seed) {
  SuiteResult res;
  res.total = draws;
  RngStream rng(seed, streams::eval);
  for (int k = 0; k < draws; ++k) {
    const int n = 2 + int(rng.uniform_int(5));
    std::vector<double> lik(static_cast<size_t>(n));
    std::vector<double> gate(static_cast<size_t>(n));
    const bool binary = rng.uniform() < 0.5;
    bool any = false;
    for (int i = 0; i < n; ++i) {
      lik[size_t(i)] = binary ? double(rng.uniform_int(2)) : rng.uniform();
      any = any || lik[size_t(i)] > 0.0;
    }
    if (!any) lik[size_t(int(rng.uniform_int(uint64_t(n))))] = 1.0;
    double gs = 0.0;
    for (int i = 0; i < n; ++i) {
      gate[size_t(i)] = 0.01 + rng.uniform();
      gs += gate[size_t(i)];
    }
    for (auto& g : gate) g /= gs;

    const auto p = MixtureNet::posterior(lik, gate);

    // independent route: long-double joint, normalized at the end
    long double z = 0.0;
    for (int i = 0; i < n; ++i)
      z += (long double)lik[size_t(i)] * (long double)gate[size_t(i)];
    double max_err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double brute =
          double((long double)lik[size_t(i)] * (long double)gate[size_t(i)] / z);
      max_err = std::max(max_err, std::fabs(p[size_t(i)] - brute));
    }
    res.worst = std::max(res.worst, max_err);
    if (max_err > tol) ++res.failed;
  }
  return res;
}

SuiteResult suite_value_bound(int instances, uint64_t seed) {
  SuiteResult res;
  res.total = instances;
  RngStream rng(seed, streams::env);
  const double gammas[3] = {0.5, 0.9, 0.95};
  res.worst = -1e300;  // max of lhs - rhs; negative means margin everywhere
  for (int k = 0; k < instances; ++k) {
    FiniteMdp truth;
    truth.S = 2 + int(rng.uniform_int(5));
    truth.A = 1 + int(rng.uniform_int(3));
    truth.gamma = gammas[rng.uniform_int(3)];
    truth.R.resize(size_t(truth.S));
    for (auto& r : truth.R) r = rng.uniform(-1, 1);
    auto random_row = [&](int S) {
      std::vector<double> row(static_cast<size_t>(S));
      double sum = 0.0;
      for (auto& x : row) {
        x = rng.uniform() + 1e-9;
        sum += x;
      }
      for (auto& x : row) x /= sum;
      return row;
    };
    truth.P.assign(size_t(truth.S), {});
    for (int s = 0; s < truth.S; ++s)
      for (int a = 0; a < truth.A; ++a)
        truth.P[size_t(s)].push_back(random_row(truth.S));

    FiniteMdp model = truth;  // same rewards; perturbed kernel
    for (int s = 0; s < truth.S; ++s)
      for (int a = 0; a < truth.A; ++a) {
        const double lam = rng.uniform();
        const auto q = random_row(truth.S);
        for (int t = 0; t < truth.S; ++t)
          model.P[size_t(s)][size_t(a)][size_t(t)] =
              (1.0 - lam) * truth.P[size_t(s)][size_t(a)][size_t(t)] +
              lam * q[size_t(t)];
      }

    std::vector<int> pi(size_t(truth.S));
    for (auto& a : pi) a = int(rng.uniform_int(uint64_t(truth.A)));

    const BoundCheck bc = check_value_bound(truth, model, pi);
    res.worst = std::max(res.worst, bc.lhs - bc.rhs);
    if (!bc.holds) ++res.failed;
  }
  return res;
}

}  // namespace ctxfer
