#include "ctxfer/mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace ctxfer {

MixtureNet::MixtureNet(std::vector<int> sizes, MixtureOptions opt, Encoder enc,
                       RngStream& init_rng)
    : net_(std::move(sizes), Head::softmax, opt.l2, init_rng),
      opt_(opt.lr),
      opt_cfg_(opt),
      enc_(std::move(enc)) {
  if (!enc_) throw std::invalid_argument("bad-config: mixture needs an encoder");
  if (opt_cfg_.epochs < 1)
    throw std::invalid_argument("bad-config: mixture epochs must be >= 1");
}

std::vector<double> MixtureNet::gate(const State& s) const {
  return net_.forward(enc_(s));
}

std::vector<double> MixtureNet::likelihoods(
    const Transition& t, const std::vector<SourceTask>& sources) const {
  std::vector<double> lik(sources.size());
  for (size_t i = 0; i < sources.size(); ++i) {
    double l = sources[i].likelihood(t);
    if (opt_cfg_.continuous && l < lik_floor) l = lik_floor;
    lik[i] = l;
  }
  return lik;
}

double MixtureNet::predictive_density(std::span<const double> lik,
                                      std::span<const double> gate) {
  if (lik.size() != gate.size())
    throw std::invalid_argument("bad-config: likelihood/gate size mismatch");
  double d = 0.0;
  for (size_t i = 0; i < lik.size(); ++i) d += lik[i] * gate[i];
  return d;
}

std::vector<double> MixtureNet::posterior(std::span<const double> lik,
                                          std::span<const double> gate) {
  const double d = predictive_density(lik, gate);
  if (d <= 0.0) throw std::runtime_error("zero-evidence");
  std::vector<double> p(lik.size());
  for (size_t i = 0; i < lik.size(); ++i) p[i] = lik[i] * gate[i] / d;
  return p;
}

template <typename Fn>
size_t MixtureNet::for_usable(const std::vector<Transition>& batch,
                              const std::vector<SourceTask>& sources,
                              Fn&& fn) const {
  if (sources.size() != size_t(net_.output_size()))
    throw std::invalid_argument("bad-config: source count != gate outputs");
  Mlp::Trace tr;
  size_t used = 0;
  for (const Transition& t : batch) {
    const auto lik = likelihoods(t, sources);
    const auto& a = net_.forward(enc_(t.s), tr);
    const double d = predictive_density(lik, a);
    if (d <= 0.0) continue;  // no source explains it; nothing to learn from
    ++used;
    fn(tr, lik, d);
  }
  return used;
}

double MixtureNet::nll(const std::vector<Transition>& batch,
                       const std::vector<SourceTask>& sources) const {
  double sum = 0.0;
  const size_t used = for_usable(batch, sources,
                                 [&](const Mlp::Trace&, const std::vector<double>&,
                                     double d) { sum -= std::log(d); });
  return used == 0 ? 0.0 : sum / double(used);
}

GradBuf MixtureNet::grad_via_posterior(
    const std::vector<Transition>& batch,
    const std::vector<SourceTask>& sources) const {
  GradBuf g = net_.make_grad();
  std::vector<double> dlogits(size_t(net_.output_size()));
  const size_t used = for_usable(
      batch, sources,
      [&](const Mlp::Trace& tr, const std::vector<double>& lik, double d) {
        for (size_t i = 0; i < dlogits.size(); ++i)
          dlogits[i] = tr.out[i] - lik[i] * tr.out[i] / d;  // gate - posterior
        net_.backward_logits(tr, dlogits, g, /*include_l2=*/false);
      });
  if (used == 0) return g;
  g.scale(1.0 / double(used));
  net_.add_l2_grad(g);
  return g;
}

GradBuf MixtureNet::grad_via_backprop(
    const std::vector<Transition>& batch,
    const std::vector<SourceTask>& sources) const {
  GradBuf g = net_.make_grad();
  std::vector<double> dout(size_t(net_.output_size()));
  const size_t used = for_usable(
      batch, sources,
      [&](const Mlp::Trace& tr, const std::vector<double>& lik, double d) {
        for (size_t i = 0; i < dout.size(); ++i) dout[i] = -lik[i] / d;
        net_.backward(tr, dout, g, /*include_l2=*/false);
      });
  if (used == 0) return g;
  g.scale(1.0 / double(used));
  net_.add_l2_grad(g);
  return g;
}

double MixtureNet::train_step(const std::vector<Transition>& batch,
                              const std::vector<SourceTask>& sources) {
  // count unusable samples once per call, not once per epoch
  long skipped = long(batch.size());
  double first_nll = 0.0;
  for (int e = 0; e < opt_cfg_.epochs; ++e) {
    if (e == 0) first_nll = nll(batch, sources);
    GradBuf g = net_.make_grad();
    std::vector<double> dlogits(size_t(net_.output_size()));
    const size_t used = for_usable(
        batch, sources,
        [&](const Mlp::Trace& tr, const std::vector<double>& lik, double d) {
          for (size_t i = 0; i < dlogits.size(); ++i)
            dlogits[i] = tr.out[i] - lik[i] * tr.out[i] / d;
          net_.backward_logits(tr, dlogits, g, /*include_l2=*/false);
        });
    if (e == 0) skipped -= long(used);
    if (used == 0) break;  // nothing usable; leave the gate untouched
    g.scale(1.0 / double(used));
    net_.add_l2_grad(g);
    adam_step(net_, opt_, g);
  }
  zero_evidence_ += skipped;
  return first_nll;
}

}  // namespace ctxfer
