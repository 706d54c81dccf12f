#include "ctxfer/transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace ctxfer {

double AdviceSchedule::at(long episode) const {
  if (episode < 1) throw std::invalid_argument("bad-config: episodes start at 1");
  return std::pow(p, double(episode));
}

int mapse_act(const MixtureNet& mix, const std::vector<SourceTask>& sources,
              const State& s, double p_t, RngStream& strategy_rng,
              const std::function<int()>& behavior) {
  if (strategy_rng.uniform() < p_t) {
    const auto g = mix.gate(s);
    const int i = int(strategy_rng.categorical(g));
    return sources[size_t(i)].advised_action(s);
  }
  return behavior();
}

MarsShaper::MarsShaper(double c, double gamma, const MixtureNet* mix,
                       const std::vector<SourceTask>* sources,
                       std::optional<std::vector<double>> fixed_gate)
    : c_(c), gamma_(gamma), mix_(mix), sources_(sources),
      fixed_gate_(std::move(fixed_gate)) {
  if (!sources_ || sources_->empty())
    throw std::invalid_argument("bad-config: shaper needs sources");
  if (!fixed_gate_ && !mix_)
    throw std::invalid_argument("bad-config: shaper needs a gate net or fixed gate");
  if (fixed_gate_ && fixed_gate_->size() != sources_->size())
    throw std::invalid_argument("bad-config: fixed gate size != source count");
}

std::vector<double> MarsShaper::gate_at(const State& s) const {
  return fixed_gate_ ? *fixed_gate_ : mix_->gate(s);
}

double MarsShaper::potential(const State& s, int a) const {
  const auto g = gate_at(s);
  double phi = 0.0;
  for (size_t i = 0; i < sources_->size(); ++i)
    phi += g[i] * (*sources_)[i].action_prob(s, a);
  return phi;
}

std::vector<double> MarsShaper::potentials(const State& s, int num_actions) const {
  const auto g = gate_at(s);
  std::vector<double> phi(size_t(num_actions), 0.0);
  for (size_t i = 0; i < sources_->size(); ++i)
    for (int a = 0; a < num_actions; ++a)
      phi[size_t(a)] += g[i] * (*sources_)[i].action_prob(s, a);
  return phi;
}

TdHook MarsShaper::make_hook(int num_actions) const {
  return [this, num_actions](const Transition& t,
                             std::span<const double> q_next) -> TdAdjust {
    TdAdjust adj;
    const double phi_now = potential(t.s, t.action);
    if (t.terminal) {
      adj.bootstrap_action = 0;  // unused: terminal bootstrap is zero
      adj.reward = t.reward + c_ * (0.0 - phi_now);
      return adj;
    }
    const auto phi_next = potentials(t.s_next, num_actions);
    int best = 0;
    double best_v = q_next[0] + c_ * phi_next[0];
    for (int b = 1; b < num_actions; ++b) {
      const double v = q_next[size_t(b)] + c_ * phi_next[size_t(b)];
      if (v > best_v) {
        best_v = v;
        best = b;
      }
    }
    adj.bootstrap_action = best;
    adj.reward = t.reward + c_ * (gamma_ * phi_next[size_t(best)] - phi_now);
    return adj;
  };
}

int MarsShaper::greedy_act(std::span<const double> q_row, const State& s) const {
  const auto phi = potentials(s, int(q_row.size()));
  int best = 0;
  double best_v = q_row[0] + c_ * phi[0];
  for (size_t a = 1; a < q_row.size(); ++a) {
    const double v = q_row[a] + c_ * phi[a];
    if (v > best_v) {
      best_v = v;
      best = int(a);
    }
  }
  return best;
}

int UcbStats::select() const {
  for (size_t i = 0; i < pulls.size(); ++i)
    if (pulls[i] == 0) return int(i);
  int best = 0;
  double best_v = -1e300;
  for (size_t i = 0; i < pulls.size(); ++i) {
    const double v = sums[i] / double(pulls[i]) +
                     std::sqrt(2.0 * std::log(double(total)) / double(pulls[i]));
    if (v > best_v) {
      best_v = v;
      best = int(i);
    }
  }
  return best;
}

void UcbStats::update(int arm, double episode_return) {
  pulls[size_t(arm)] += 1;
  sums[size_t(arm)] += episode_return;
  total += 1;
}

}  // namespace ctxfer
