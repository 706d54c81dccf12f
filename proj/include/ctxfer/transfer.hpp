#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ctxfer/agents.hpp"
#include "ctxfer/mixture.hpp"
#include "ctxfer/sources.hpp"

namespace ctxfer {

// Advice-following probability p^episode, episodes counted from 1, so the
// first episode already follows advice with probability p and p = 0 means
// the advice path is never taken.
struct AdviceSchedule {
  double p = 1.0;
  double at(long episode) const;
};

// One MAPSE action draw: with probability p_t pick a source through the gate
// and take its advice; otherwise defer to the agent's own behavior policy.
// All randomness here stays on `strategy_rng` so a p_t = 0 run consumes the
// agent's streams exactly like an unassisted run.
int mapse_act(const MixtureNet& mix, const std::vector<SourceTask>& sources,
              const State& s, double p_t, RngStream& strategy_rng,
              const std::function<int()>& behavior);

// Dynamic state-action potential: phi(s,a) = sum_i g_i(s) * P(a = pi_i(s)),
// with g either the live gate or a fixed weighting (single-source baselines).
// Shaping with a state-action potential biases the TD fixed point to
// Q* - c*phi, so action selection and bootstrapping must both add c*phi
// back; make_hook and greedy_act implement that jointly and policy
// invariance holds by construction.
class MarsShaper {
 public:
  MarsShaper(double c, double gamma, const MixtureNet* mix,
             const std::vector<SourceTask>* sources,
             std::optional<std::vector<double>> fixed_gate = std::nullopt);

  double c() const { return c_; }
  std::vector<double> gate_at(const State& s) const;
  double potential(const State& s, int a) const;
  std::vector<double> potentials(const State& s, int num_actions) const;

  // TD hook: bootstrap action b* = argmax_b [q_next(b) + c*phi(s',b)], and
  // the effective reward is r + c*(gamma*phi(s',b*) - phi(s,a)), with the
  // next potential dropped on terminal transitions
  TdHook make_hook(int num_actions) const;

  // greedy action under advice: argmax_a [q(s,a) + c*phi(s,a)], ties lowest
  int greedy_act(std::span<const double> q_row, const State& s) const;

 private:
  double c_ = 1.0;
  double gamma_ = 0.99;
  const MixtureNet* mix_ = nullptr;
  const std::vector<SourceTask>* sources_ = nullptr;
  std::optional<std::vector<double>> fixed_gate_;
};

// UCB1 over source experts: per-episode arm choice by mean return plus
// sqrt(2 ln N / n_i), unpulled arms first, ties to the lowest index.
struct UcbStats {
  std::vector<long> pulls;
  std::vector<double> sums;
  long total = 0;

  explicit UcbStats(int n) : pulls(size_t(n), 0), sums(size_t(n), 0.0) {}
  int select() const;
  void update(int arm, double episode_return);
};

}  // namespace ctxfer
