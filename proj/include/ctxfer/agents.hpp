#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ctxfer/core.hpp"
#include "ctxfer/nn.hpp"

namespace ctxfer {

// What a TD update should actually regress on.  Reward shaping and advice
// plug in here: the hook sees the raw transition plus the next-state action
// values the agent will bootstrap from, and returns the effective reward and
// which next action to bootstrap with.  Without a hook the agent does plain
// Q-learning (bootstrap = argmax of q_next).
struct TdAdjust {
  double reward = 0.0;
  int bootstrap_action = 0;
};
using TdHook =
    std::function<TdAdjust(const Transition&, std::span<const double> q_next)>;

// Tabular Q-learning over indexed states.
struct QTable {
  int num_states = 0;
  int num_actions = 0;
  double lr = 0.1;
  double gamma = 0.99;
  std::vector<double> q;  // S*A, zero-initialized

  QTable() = default;
  QTable(int S, int A, double lr_, double gamma_);

  double& at(int s, int a) { return q[size_t(s) * size_t(num_actions) + size_t(a)]; }
  double at(int s, int a) const {
    return q[size_t(s) * size_t(num_actions) + size_t(a)];
  }
  std::span<const double> row(int s) const {
    return {q.data() + size_t(s) * size_t(num_actions), size_t(num_actions)};
  }

  // one Watkins update on a fresh transition (online regime)
  void update(const Transition& t, const TdHook& hook = nullptr);
  int greedy(int s) const;  // ties resolve to lowest action
};

// uniform action with probability eps, otherwise greedy (ties to lowest)
int epsilon_greedy(std::span<const double> q_row, double eps, RngStream& rng);

// DQN: online/target pair, minibatch regression on replayed transitions,
// hard target sync every `sync_every` batches.
class DqnAgent {
 public:
  DqnAgent() = default;
  DqnAgent(std::vector<int> sizes, double lr, double l2, double gamma, int batch,
           int sync_every, RngStream& init_rng);

  std::vector<double> q_values(const State& s) const { return online_.forward(s.features); }
  std::vector<double> q_values_target(const State& s) const {
    return target_.forward(s.features);
  }
  const Mlp& online() const { return online_; }
  Mlp& online() { return online_; }
  long batches() const { return batches_; }
  int batch_size() const { return batch_; }
  double gamma() const { return gamma_; }

  // One minibatch step; samples come from `buf` via `sample_rng`.  Returns
  // the batch TD loss, or nullopt (and does nothing) while the buffer holds
  // fewer than `batch` transitions.
  std::optional<double> train_step(const ReplayBuffer& buf, RngStream& sample_rng,
                                   const TdHook& hook = nullptr);

 private:
  Mlp online_, target_;
  AdamState opt_;
  int batch_ = 32;
  int sync_every_ = 500;
  double gamma_ = 0.99;
  long batches_ = 0;
};

}  // namespace ctxfer
