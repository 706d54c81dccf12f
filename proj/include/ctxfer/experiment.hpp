#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctxfer/agents.hpp"
#include "ctxfer/mixture.hpp"
#include "ctxfer/sources.hpp"
#include "ctxfer/transfer.hpp"

namespace ctxfer {

// shortest round-trip decimal form (to_chars); keeps emitted CSV/JSON stable
// across runs and platforms
std::string format_double(double v);

struct ExperimentConfig {
  std::string env = "maze";       // maze | maze10 | cartpole
  std::string strategy = "none";  // none | mars | mapse | ucb | phi<i>
  long steps = 100000;
  int trials = 1;
  uint64_t seed = 1;
  std::string sources_dir;  // pretrained bundle; required unless strategy=none
  std::string out_dir = "out";
  std::string maze_file;  // custom layout for maze envs; empty = bundled default
  int rooms_x = 2;        // room grid of a custom layout
  int rooms_y = 1;

  // agent
  double gamma = 0.95;
  std::string eps_schedule = "constant";  // constant | pow
  double eps = 0.12;                      // constant exploration rate
  double eps_pow_base = 0.99;             // pow: max(eps_floor, base^episode)
  double eps_floor = 0.01;
  double agent_lr = 0.8;
  std::vector<int> agent_hidden{40, 40};  // value net (non-tabular envs)
  int buffer_capacity = 5000;
  int batch = 32;
  int sync_every = 500;
  double l2 = 1e-6;

  // mixture gate
  std::vector<int> mix_hidden{30, 30};
  double mix_lr = 1e-3;
  int mix_epochs = 4;
  double mix_l2 = 0.0;
  int mix_batch = 32;

  // transfer knobs
  double c = 1.0;   // shaping scale
  double p = 0.99;  // advice-following base probability
  double nu = 5e5;  // continuous likelihood sharpness

  // reporting
  long eval_every = 1000;
  int eval_episodes = 5;
  std::vector<long> snapshots;  // gate snapshot checkpoints, in env steps
};

// benchmark defaults; `strategy` matters because shaped runs use a smaller
// agent learning rate
ExperimentConfig default_config(const std::string& env, const std::string& strategy);
void validate_config(const ExperimentConfig& cfg);  // throws "bad-config"
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

struct StrategyKind {
  enum Kind { none, mars, mapse, ucb, phi } kind = none;
  int phi_index = -1;  // phi<i> only
};
StrategyKind parse_strategy(const std::string& s);  // throws "bad-config"

// environment behind a uniform interface so one trial loop drives both
// benchmarks
struct EnvHandle {
  std::string id;
  bool tabular = false;
  int num_actions = 0;
  int num_states = 0;  // tabular only
  int encoder_dim = 0;
  long max_episode_steps = 0;
  std::function<State(RngStream&)> reset;
  std::function<Transition(const State&, int)> step;
  Encoder encoder;
  std::vector<State> probe_states;      // where gate snapshots are taken
  std::vector<std::string> probe_reprs;
  std::string metric_name;  // steps_to_goal (lower better) | steps_balanced
};
EnvHandle make_env(const ExperimentConfig& cfg);

struct EvalPoint {
  long step = 0;
  double mean = 0.0;    // mean episode metric over eval_episodes greedy runs
  double stderr_ = 0.0; // within-eval standard error
};

struct GateSnapshotRow {
  long checkpoint = 0;
  std::string repr;
  std::vector<double> gate;
};

struct TrialResult {
  std::vector<EvalPoint> evals;
  std::vector<GateSnapshotRow> snapshots;
  double final_metric = 0.0;
  long episodes = 0;
  long zero_evidence = 0;
  double worst_gate_sum_err = 0.0;  // max |sum(gate) - 1| seen at evals
};

uint64_t trial_seed(uint64_t base, int trial_index);

// one seeded trial; `sources` may be null only for strategy none
TrialResult run_trial(const ExperimentConfig& cfg,
                      const std::vector<SourceTask>* sources, int trial_index);

// writes curve.csv, gate_snapshots.csv, and meta.json into cfg.out_dir
void emit_outputs(const ExperimentConfig& cfg,
                  const std::vector<TrialResult>& trials, double elapsed_seconds);

// loads sources if needed, runs every trial, emits outputs; returns results
std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg);

}  // namespace ctxfer
