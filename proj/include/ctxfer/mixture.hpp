#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctxfer/core.hpp"
#include "ctxfer/nn.hpp"
#include "ctxfer/sources.hpp"

namespace ctxfer {

// Maps an environment state to the gate net's input vector.
using Encoder = std::function<std::vector<double>(const State&)>;

struct MixtureOptions {
  double lr = 1e-3;
  double l2 = 0.0;
  int epochs = 1;        // Adam passes per train_step call
  bool continuous = false;  // floor likelihoods at lik_floor when true
};

// Soft contextual mixture over source-task forward models.  The gate net
// a(s) is a softmax MLP trained to maximize the predictive density of
// observed target transitions, sum_i L_i(t) * a_i(s); the per-sample logit
// gradient is gate minus posterior.
class MixtureNet {
 public:
  // sizes = {encoder_dim, hidden..., num_sources}
  MixtureNet(std::vector<int> sizes, MixtureOptions opt, Encoder enc,
             RngStream& init_rng);

  int num_sources() const { return net_.output_size(); }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  const Encoder& encoder() const { return enc_; }
  long zero_evidence_skipped() const { return zero_evidence_; }
  static constexpr double lik_floor = 1e-12;

  std::vector<double> gate(const State& s) const;

  // raw source likelihoods of one transition, floored only in continuous mode
  std::vector<double> likelihoods(const Transition& t,
                                  const std::vector<SourceTask>& sources) const;

  static double predictive_density(std::span<const double> lik,
                                   std::span<const double> gate);
  // Bayes posterior over sources given one transition's likelihoods; throws
  // "zero-evidence" when the density vanishes
  static std::vector<double> posterior(std::span<const double> lik,
                                       std::span<const double> gate);

  // mean negative log predictive density over usable samples; samples whose
  // likelihoods are all zero carry no signal and are excluded
  double nll(const std::vector<Transition>& batch,
             const std::vector<SourceTask>& sources) const;

  // Two independent gradient routes for the same loss (mean NLL + l2*||w||^2).
  // They must agree to numerical precision; keeping both makes that checkable.
  GradBuf grad_via_posterior(const std::vector<Transition>& batch,
                             const std::vector<SourceTask>& sources) const;
  GradBuf grad_via_backprop(const std::vector<Transition>& batch,
                            const std::vector<SourceTask>& sources) const;

  // `epochs` Adam passes on the batch via the posterior-route gradient.
  // Returns the mean NLL measured before the first update; all-zero-evidence
  // samples are counted once per call and the update is skipped if none of
  // the batch is usable.
  double train_step(const std::vector<Transition>& batch,
                    const std::vector<SourceTask>& sources);

 private:
  // shared walk over the batch: yields (trace, likelihoods, density) per
  // usable sample
  template <typename Fn>
  size_t for_usable(const std::vector<Transition>& batch,
                    const std::vector<SourceTask>& sources, Fn&& fn) const;

  Mlp net_;
  AdamState opt_;
  MixtureOptions opt_cfg_;
  Encoder enc_;
  long zero_evidence_ = 0;
};

}  // namespace ctxfer
