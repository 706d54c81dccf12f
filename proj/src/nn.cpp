#include "ctxfer/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace ctxfer {

void GradBuf::zero() {
  for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void GradBuf::scale(double a) {
  for (auto& v : w)
    for (double& x : v) x *= a;
  for (auto& v : b)
    for (double& x : v) x *= a;
}

void GradBuf::add(const GradBuf& o, double a) {
  for (size_t l = 0; l < w.size(); ++l) {
    for (size_t i = 0; i < w[l].size(); ++i) w[l][i] += a * o.w[l][i];
    for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += a * o.b[l][i];
  }
}

double GradBuf::max_abs() const {
  double m = 0.0;
  for (const auto& v : w)
    for (double x : v) m = std::max(m, std::fabs(x));
  for (const auto& v : b)
    for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

Mlp::Mlp(std::vector<int> sizes, Head head, double l2, RngStream& rng)
    : sizes_(std::move(sizes)), head_(head), l2_(l2) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  const size_t L = sizes_.size() - 1;
  w.resize(L);
  b.resize(L);
  for (size_t l = 0; l < L; ++l) {
    const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
    const double lim = std::sqrt(6.0 / double(fan_in + fan_out));
    w[l].resize(size_t(fan_out) * fan_in);
    for (double& x : w[l]) x = rng.uniform(-lim, lim);
    b[l].assign(size_t(fan_out), 0.0);
  }
}

size_t Mlp::num_params() const {
  size_t n = 0;
  for (size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

void Mlp::apply_head(const std::vector<double>& z, std::vector<double>& out) const {
  out.resize(z.size());
  switch (head_) {
    case Head::linear:
      out = z;
      break;
    case Head::softmax: {
      // max-shift keeps exp in range; softmax is invariant to the shift
      double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - zmax);
        sum += out[i];
      }
      for (double& x : out) x /= sum;
      break;
    }
    case Head::tanh_squash:
      for (size_t i = 0; i < z.size(); ++i) out[i] = std::tanh(z[i]);
      break;
  }
}

const std::vector<double>& Mlp::forward(std::span<const double> x, Trace& tr) const {
  if (int(x.size()) != sizes_.front())
    throw std::invalid_argument("dimension-mismatch: Mlp::forward input size");
  const size_t L = w.size();
  tr.act.resize(L + 1);
  tr.act[0].assign(x.begin(), x.end());
  for (size_t l = 0; l < L; ++l) {
    const int nin = sizes_[l], nout = sizes_[l + 1];
    auto& out = tr.act[l + 1];
    out.assign(size_t(nout), 0.0);
    const auto& in = tr.act[l];
    for (int i = 0; i < nout; ++i) {
      double s = b[l][size_t(i)];
      const double* wr = &w[l][size_t(i) * nin];
      for (int j = 0; j < nin; ++j) s += wr[j] * in[size_t(j)];
      out[size_t(i)] = s;
    }
    if (l + 1 < L)
      for (double& v : out) v = v > 0.0 ? v : 0.0;  // ReLU on hidden layers
  }
  apply_head(tr.act[L], tr.out);
  return tr.out;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Trace tr;
  return forward(x, tr);
}

void Mlp::backward(const Trace& tr, std::span<const double> dout, GradBuf& g,
                   bool include_l2) const {
  if (dout.size() != tr.out.size())
    throw std::invalid_argument("dimension-mismatch: Mlp::backward upstream size");
  // head Jacobian: dLoss/dz for the pre-head logits z = act[L]
  std::vector<double> dz(dout.begin(), dout.end());
  switch (head_) {
    case Head::linear:
      break;
    case Head::softmax: {
      double dot = 0.0;
      for (size_t i = 0; i < dz.size(); ++i) dot += dout[i] * tr.out[i];
      for (size_t i = 0; i < dz.size(); ++i) dz[i] = tr.out[i] * (dout[i] - dot);
      break;
    }
    case Head::tanh_squash:
      for (size_t i = 0; i < dz.size(); ++i) dz[i] = dout[i] * (1.0 - tr.out[i] * tr.out[i]);
      break;
  }
  backward_logits(tr, dz, g, include_l2);
}

void Mlp::backward_logits(const Trace& tr, std::span<const double> dlogits, GradBuf& g,
                          bool include_l2) const {
  const size_t L = w.size();
  std::vector<double> dz(dlogits.begin(), dlogits.end());
  std::vector<double> dprev;
  for (size_t l = L; l-- > 0;) {
    const int nin = sizes_[l], nout = sizes_[l + 1];
    const auto& in = tr.act[l];
    for (int i = 0; i < nout; ++i) {
      const double d = dz[size_t(i)];
      g.b[l][size_t(i)] += d;
      double* gw = &g.w[l][size_t(i) * nin];
      for (int j = 0; j < nin; ++j) gw[j] += d * in[size_t(j)];
    }
    if (l > 0) {
      dprev.assign(size_t(nin), 0.0);
      for (int i = 0; i < nout; ++i) {
        const double d = dz[size_t(i)];
        const double* wr = &w[l][size_t(i) * nin];
        for (int j = 0; j < nin; ++j) dprev[size_t(j)] += d * wr[j];
      }
      // ReLU mask: act[l] is the post-ReLU hidden output
      for (int j = 0; j < nin; ++j)
        if (in[size_t(j)] <= 0.0) dprev[size_t(j)] = 0.0;
      dz.swap(dprev);
    }
  }
  if (include_l2) add_l2_grad(g);
}

void Mlp::add_l2_grad(GradBuf& g) const {
  if (l2_ == 0.0) return;
  for (size_t l = 0; l < w.size(); ++l)
    for (size_t i = 0; i < w[l].size(); ++i) g.w[l][i] += 2.0 * l2_ * w[l][i];
}

GradBuf Mlp::make_grad() const {
  GradBuf g;
  g.w.resize(w.size());
  g.b.resize(b.size());
  for (size_t l = 0; l < w.size(); ++l) {
    g.w[l].assign(w[l].size(), 0.0);
    g.b[l].assign(b[l].size(), 0.0);
  }
  return g;
}

double Mlp::get_param(size_t i) const {
  for (size_t l = 0; l < w.size(); ++l) {
    if (i < w[l].size()) return w[l][i];
    i -= w[l].size();
    if (i < b[l].size()) return b[l][i];
    i -= b[l].size();
  }
  throw std::out_of_range("Mlp::get_param");
}

void Mlp::set_param(size_t i, double v) {
  for (size_t l = 0; l < w.size(); ++l) {
    if (i < w[l].size()) {
      w[l][i] = v;
      return;
    }
    i -= w[l].size();
    if (i < b[l].size()) {
      b[l][i] = v;
      return;
    }
    i -= b[l].size();
  }
  throw std::out_of_range("Mlp::set_param");
}

void adam_step(Mlp& net, AdamState& st, const GradBuf& g) {
  if (st.m.w.empty()) {
    st.m = net.make_grad();
    st.v = net.make_grad();
  }
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.t));
  auto upd = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& gr) {
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * gr[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * gr[i] * gr[i];
      p[i] -= st.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + st.eps);
    }
  };
  for (size_t l = 0; l < net.w.size(); ++l) {
    upd(net.w[l], st.m.w[l], st.v.w[l], g.w[l]);
    upd(net.b[l], st.m.b[l], st.v.b[l], g.b[l]);
  }
}

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[size_t(i)] > v[size_t(best)]) best = i;
  return best;
}

static std::string head_name(Head h) {
  switch (h) {
    case Head::linear: return "linear";
    case Head::softmax: return "softmax";
    case Head::tanh_squash: return "tanh_squash";
  }
  return "linear";
}

static Head head_from(const std::string& s) {
  if (s == "linear") return Head::linear;
  if (s == "softmax") return Head::softmax;
  if (s == "tanh_squash") return Head::tanh_squash;
  throw std::runtime_error("Mlp::deserialize: unknown head '" + s + "'");
}

std::string Mlp::serialize() const {
  nlohmann::json j;
  j["sizes"] = sizes_;
  j["head"] = head_name(head_);
  j["l2"] = l2_;
  j["w"] = w;
  j["b"] = b;
  return j.dump();
}

Mlp Mlp::deserialize(const std::string& js) {
  nlohmann::json j = nlohmann::json::parse(js);
  Mlp net;
  net.sizes_ = j.at("sizes").get<std::vector<int>>();
  net.head_ = head_from(j.at("head").get<std::string>());
  net.l2_ = j.at("l2").get<double>();
  net.w = j.at("w").get<std::vector<std::vector<double>>>();
  net.b = j.at("b").get<std::vector<std::vector<double>>>();
  if (net.w.size() + 1 != net.sizes_.size() || net.b.size() != net.w.size())
    throw std::runtime_error("Mlp::deserialize: layer count mismatch");
  for (size_t l = 0; l < net.w.size(); ++l) {
    if (net.w[l].size() != size_t(net.sizes_[l]) * size_t(net.sizes_[l + 1]) ||
        net.b[l].size() != size_t(net.sizes_[l + 1]))
      throw std::runtime_error("Mlp::deserialize: parameter shape mismatch");
  }
  return net;
}

}  // namespace ctxfer
