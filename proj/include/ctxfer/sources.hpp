#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ctxfer/core.hpp"
#include "ctxfer/nn.hpp"

namespace ctxfer {

// Deterministic-by-default expert policy for a solved source task.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int act(const State& s) const = 0;
  // probability the policy picks `a` in `s`; deterministic -> indicator
  virtual double action_prob(const State& s, int a) const {
    return act(s) == a ? 1.0 : 0.0;
  }
};

// Lookup policy over discrete states (indexed by State::index).
class TablePolicy : public Policy {
 public:
  explicit TablePolicy(std::vector<int> actions) : actions_(std::move(actions)) {}
  int act(const State& s) const override;
  const std::vector<int>& table() const { return actions_; }

 private:
  std::vector<int> actions_;
};

// Greedy readout of a value net: act = argmax_a Q(s, a), ties to lowest.
class GreedyNetPolicy : public Policy {
 public:
  explicit GreedyNetPolicy(Mlp net) : net_(std::move(net)) {}
  int act(const State& s) const override;
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
};

class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(int num_actions) : n_(num_actions) {}
  int act(const State&) const override { return 0; }
  double action_prob(const State&, int) const override { return 1.0 / n_; }
  int num_actions() const { return n_; }

 private:
  int n_;
};

// Deterministic tabular forward model s' = f(s, a).  Unvisited pairs predict
// the identity transition and are flagged so callers can tell real evidence
// from the default.
struct TabularDyn {
  int num_states = 0;
  int num_actions = 0;
  std::vector<int> next;       // size S*A
  std::vector<uint8_t> seen;   // size S*A

  TabularDyn() = default;
  TabularDyn(int S, int A);
  void observe(int s, int a, int s_next);
  int predict(int s, int a) const;
  bool visited(int s, int a) const;
};

// Continuous forward model: the net maps [features ++ one-hot(a)] to the
// state *delta*, which keeps targets near zero at small dt and makes the
// sharp likelihood kernel usable.
struct MlpDyn {
  Mlp net;
  int num_actions = 0;

  std::vector<double> predict(const std::vector<double>& feat, int a) const;
};

// One Adam step of mean-squared-error on predicted deltas; returns the
// batch MSE before the step.
double dyn_train_step(MlpDyn& dyn, const std::vector<Transition>& batch,
                      AdamState& opt);
double dyn_mse(const MlpDyn& dyn, const std::vector<Transition>& data);

// A solved source task: its expert policy plus a learned forward model of
// its dynamics, evaluated on target-task transitions.
struct SourceTask {
  std::string name;
  std::unique_ptr<Policy> policy;
  std::variant<TabularDyn, MlpDyn> dyn;
  double nu = 0.0;  // kernel sharpness exp(-nu * ||err||^2), continuous only

  // un-floored likelihood of observing t under this source's dynamics:
  // tabular -> {0, 1}; continuous -> exp(-nu * ||s' - f(s,a)||^2)
  double likelihood(const Transition& t) const;
  int advised_action(const State& s) const { return policy->act(s); }
  double action_prob(const State& s, int a) const {
    return policy->action_prob(s, a);
  }
};

// Directory bundle round-trip.  Layout: manifest.json naming one policy and
// one dynamics file per source.  Throws "sources-not-found" if the directory
// or manifest is missing and "bad-config" on malformed content.
void save_sources(const std::string& dir, const std::vector<SourceTask>& tasks);
std::vector<SourceTask> load_sources(const std::string& dir);

}  // namespace ctxfer
