#include "ctxfer/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ctxfer/cartpole.hpp"
#include "ctxfer/maze.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctxfer {

std::string format_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

StrategyKind parse_strategy(const std::string& s) {
  StrategyKind k;
  if (s == "none") {
    k.kind = StrategyKind::none;
  } else if (s == "mars") {
    k.kind = StrategyKind::mars;
  } else if (s == "mapse") {
    k.kind = StrategyKind::mapse;
  } else if (s == "ucb") {
    k.kind = StrategyKind::ucb;
  } else if (s.size() > 3 && s.rfind("phi", 0) == 0) {
    k.kind = StrategyKind::phi;
    int idx = -1;
    const auto r = std::from_chars(s.data() + 3, s.data() + s.size(), idx);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || idx < 0)
      throw std::invalid_argument("bad-config: unknown strategy '" + s + "'");
    k.phi_index = idx;
  } else {
    throw std::invalid_argument("bad-config: unknown strategy '" + s + "'");
  }
  return k;
}

ExperimentConfig default_config(const std::string& env,
                                const std::string& strategy) {
  ExperimentConfig c;
  c.env = env;
  c.strategy = strategy;
  const StrategyKind k = parse_strategy(strategy);
  const bool shaped =
      k.kind == StrategyKind::mars || k.kind == StrategyKind::phi;
  if (env == "maze" || env == "maze10") {
    c.gamma = 0.95;
    c.eps_schedule = "constant";
    c.eps = 0.12;
    c.agent_lr = shaped ? 0.08 : 0.8;
    c.buffer_capacity = 5000;
    c.mix_hidden = {30, 30};
    c.mix_lr = 1e-3;
    c.mix_epochs = 4;
    c.mix_batch = 32;
    c.c = 1.0;
    c.p = k.kind == StrategyKind::ucb ? 0.85 : 0.99;
    if (env == "maze") {
      c.steps = 100000;
      c.snapshots = {0, 5000, 10000, 20000, 50000, 100000};
    } else {
      c.steps = 30000;
      c.snapshots = {0, 1000, 2000, 5000, 10000, 20000};
    }
  } else if (env == "cartpole") {
    c.gamma = 0.98;
    c.eps_schedule = "pow";
    c.eps_pow_base = 0.99;
    c.eps_floor = 0.01;
    c.agent_lr = shaped ? 0.0002 : 0.0005;
    c.agent_hidden = {40, 40};
    c.buffer_capacity = 5000;
    c.batch = 32;
    c.sync_every = 500;
    c.l2 = 1e-6;
    c.mix_hidden = {30, 30};
    c.mix_lr = 1e-3;
    c.mix_epochs = 3;
    c.mix_batch = 32;
    c.c = 2.0;
    c.p = 0.85;
    c.nu = 5e5;
    c.steps = 100000;
    c.snapshots = {0, 100, 500, 1000, 2500, 5000};
  } else {
    throw std::invalid_argument("bad-config: unknown env '" + env + "'");
  }
  return c;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.env != "maze" && cfg.env != "maze10" && cfg.env != "cartpole")
    throw std::invalid_argument("bad-config: unknown env '" + cfg.env + "'");
  parse_strategy(cfg.strategy);
  if (cfg.steps < 1) throw std::invalid_argument("bad-config: steps must be >= 1");
  if (cfg.trials < 1) throw std::invalid_argument("bad-config: trials must be >= 1");
  if (cfg.gamma <= 0.0 || cfg.gamma >= 1.0)
    throw std::invalid_argument("bad-config: gamma must be in (0, 1)");
  if (cfg.eps < 0.0 || cfg.eps > 1.0 || cfg.p < 0.0 || cfg.p > 1.0)
    throw std::invalid_argument("bad-config: eps and p must be in [0, 1]");
  if (cfg.c < 0.0) throw std::invalid_argument("bad-config: c must be >= 0");
  if (cfg.eps_schedule != "constant" && cfg.eps_schedule != "pow")
    throw std::invalid_argument("bad-config: eps_schedule must be constant|pow");
  if (cfg.batch < 1 || cfg.mix_batch < 1 || cfg.buffer_capacity < cfg.batch ||
      cfg.buffer_capacity < cfg.mix_batch)
    throw std::invalid_argument("bad-config: buffer must hold at least one batch");
  if (cfg.eval_every < 1 || cfg.eval_episodes < 1)
    throw std::invalid_argument("bad-config: eval cadence must be positive");
  if (cfg.mix_epochs < 1)
    throw std::invalid_argument("bad-config: mix_epochs must be >= 1");
  if (!cfg.maze_file.empty() && cfg.env == "cartpole")
    throw std::invalid_argument("bad-config: maze_file only applies to maze envs");
  if (cfg.rooms_x < 1 || cfg.rooms_y < 1)
    throw std::invalid_argument("bad-config: room grid must be at least 1x1");
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["env"] = c.env;
  j["strategy"] = c.strategy;
  j["steps"] = c.steps;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["sources_dir"] = c.sources_dir;
  j["out_dir"] = c.out_dir;
  j["maze_file"] = c.maze_file;
  j["rooms_x"] = c.rooms_x;
  j["rooms_y"] = c.rooms_y;
  j["gamma"] = c.gamma;
  j["eps_schedule"] = c.eps_schedule;
  j["eps"] = c.eps;
  j["eps_pow_base"] = c.eps_pow_base;
  j["eps_floor"] = c.eps_floor;
  j["agent_lr"] = c.agent_lr;
  j["agent_hidden"] = c.agent_hidden;
  j["buffer_capacity"] = c.buffer_capacity;
  j["batch"] = c.batch;
  j["sync_every"] = c.sync_every;
  j["l2"] = c.l2;
  j["mix_hidden"] = c.mix_hidden;
  j["mix_lr"] = c.mix_lr;
  j["mix_epochs"] = c.mix_epochs;
  j["mix_l2"] = c.mix_l2;
  j["mix_batch"] = c.mix_batch;
  j["c"] = c.c;
  j["p"] = c.p;
  j["nu"] = c.nu;
  j["eval_every"] = c.eval_every;
  j["eval_episodes"] = c.eval_episodes;
  j["snapshots"] = c.snapshots;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad-config: ") + e.what());
  }
  try {
    const std::string env = j.at("env").get<std::string>();
    const std::string strategy = j.value("strategy", std::string("none"));
    ExperimentConfig c = default_config(env, strategy);
    // every other key is an override on the benchmark defaults
    if (j.contains("steps")) c.steps = j["steps"].get<long>();
    if (j.contains("trials")) c.trials = j["trials"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("sources_dir")) c.sources_dir = j["sources_dir"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("maze_file")) c.maze_file = j["maze_file"].get<std::string>();
    if (j.contains("rooms_x")) c.rooms_x = j["rooms_x"].get<int>();
    if (j.contains("rooms_y")) c.rooms_y = j["rooms_y"].get<int>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("eps_schedule")) c.eps_schedule = j["eps_schedule"].get<std::string>();
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("eps_pow_base")) c.eps_pow_base = j["eps_pow_base"].get<double>();
    if (j.contains("eps_floor")) c.eps_floor = j["eps_floor"].get<double>();
    if (j.contains("agent_lr")) c.agent_lr = j["agent_lr"].get<double>();
    if (j.contains("agent_hidden")) c.agent_hidden = j["agent_hidden"].get<std::vector<int>>();
    if (j.contains("buffer_capacity")) c.buffer_capacity = j["buffer_capacity"].get<int>();
    if (j.contains("batch")) c.batch = j["batch"].get<int>();
    if (j.contains("sync_every")) c.sync_every = j["sync_every"].get<int>();
    if (j.contains("l2")) c.l2 = j["l2"].get<double>();
    if (j.contains("mix_hidden")) c.mix_hidden = j["mix_hidden"].get<std::vector<int>>();
    if (j.contains("mix_lr")) c.mix_lr = j["mix_lr"].get<double>();
    if (j.contains("mix_epochs")) c.mix_epochs = j["mix_epochs"].get<int>();
    if (j.contains("mix_l2")) c.mix_l2 = j["mix_l2"].get<double>();
    if (j.contains("mix_batch")) c.mix_batch = j["mix_batch"].get<int>();
    if (j.contains("c")) c.c = j["c"].get<double>();
    if (j.contains("p")) c.p = j["p"].get<double>();
    if (j.contains("nu")) c.nu = j["nu"].get<double>();
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<long>();
    if (j.contains("eval_episodes")) c.eval_episodes = j["eval_episodes"].get<int>();
    if (j.contains("snapshots")) c.snapshots = j["snapshots"].get<std::vector<long>>();
    return c;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad-config: ") + e.what());
  }
}

EnvHandle make_env(const ExperimentConfig& cfg) {
  EnvHandle h;
  if (cfg.env == "maze" || cfg.env == "maze10") {
    const MazeSpec m =
        !cfg.maze_file.empty()
            ? load_maze_file(cfg.maze_file, cfg.rooms_x, cfg.rooms_y, "maze-custom")
            : (cfg.env == "maze" ? make_maze30() : make_maze10());
    h.id = m.name;
    h.tabular = true;
    h.num_actions = 4;
    h.num_states = m.num_states();
    h.encoder_dim = m.height + m.width;
    h.max_episode_steps = m.max_episode_steps;
    h.metric_name = "steps_to_goal";
    h.reset = [m](RngStream&) {
      State s;
      s.index = m.start;
      return s;
    };
    h.step = [m](const State& s, int a) {
      const MazeStep r = maze_step(m, s.index, a);
      Transition t;
      t.s = s;
      t.action = a;
      t.reward = r.reward;
      t.s_next.index = r.next;
      t.terminal = r.at_goal;
      return t;
    };
    h.encoder = [m](const State& s) { return maze_encode(m, s.index); };
    for (int idx = 0; idx < m.num_states(); ++idx) {
      if (m.is_wall(idx)) continue;
      State s;
      s.index = idx;
      h.probe_states.push_back(s);
      h.probe_reprs.push_back(std::to_string(m.row_of(idx)) + ":" +
                              std::to_string(m.col_of(idx)));
    }
  } else if (cfg.env == "cartpole") {
    const CartPoleSpec cp = make_transfer_cartpole();
    h.id = cp.name;
    h.tabular = false;
    h.num_actions = CartPoleSpec::num_actions;
    h.encoder_dim = 4;
    h.max_episode_steps = cp.max_episode_steps;
    h.metric_name = "steps_balanced";
    h.reset = [cp](RngStream& rng) { return cartpole_reset(cp, rng); };
    h.step = [cp](const State& s, int a) {
      const CartPoleStep r = cartpole_step(cp, s, a);
      Transition t;
      t.s = s;
      t.action = a;
      t.reward = r.reward;
      t.s_next = r.next;
      t.terminal = r.terminal;
      return t;
    };
    h.encoder = [](const State& s) { return s.features; };
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      for (double th : {-0.1, 0.0, 0.1}) {
        State s;
        s.features = {x, 0.0, th, 0.0};
        h.probe_states.push_back(s);
        h.probe_reprs.push_back(format_double(x) + ":" + format_double(th));
      }
    }
  } else {
    throw std::invalid_argument("bad-config: unknown env '" + cfg.env + "'");
  }
  return h;
}

uint64_t trial_seed(uint64_t base, int trial_index) {
  return base * 10007ull + uint64_t(trial_index);
}

namespace {

// A bundle built for a different grid or physics would index its tables and
// nets with this environment's states, out of range; reject any dimension
// mismatch up front.
void check_sources_fit(const EnvHandle& env,
                       const std::vector<SourceTask>& sources) {
  for (const auto& src : sources) {
    std::string why;
    if (const auto* tab = std::get_if<TabularDyn>(&src.dyn)) {
      if (!env.tabular)
        why = "tabular dynamics on a continuous environment";
      else if (tab->num_states != env.num_states ||
               tab->num_actions != env.num_actions)
        why = "dynamics table is " + std::to_string(tab->num_states) + "x" +
              std::to_string(tab->num_actions) + ", environment needs " +
              std::to_string(env.num_states) + "x" +
              std::to_string(env.num_actions);
    } else {
      const auto& m = std::get<MlpDyn>(src.dyn);
      if (env.tabular)
        why = "continuous dynamics on a tabular environment";
      else if (m.num_actions != env.num_actions ||
               m.net.input_size() != env.encoder_dim + env.num_actions ||
               m.net.output_size() != env.encoder_dim)
        why = "dynamics net shape does not match the environment";
    }
    if (why.empty()) {
      if (const auto* tp = dynamic_cast<const TablePolicy*>(src.policy.get())) {
        if (!env.tabular || int(tp->table().size()) != env.num_states)
          why = "policy table has " + std::to_string(tp->table().size()) +
                " states, environment has " + std::to_string(env.num_states);
      } else if (const auto* gp =
                     dynamic_cast<const GreedyNetPolicy*>(src.policy.get())) {
        if (gp->net().input_size() != env.encoder_dim ||
            gp->net().output_size() != env.num_actions)
          why = "policy net shape does not match the environment";
      } else if (const auto* up =
                     dynamic_cast<const UniformPolicy*>(src.policy.get())) {
        if (up->num_actions() != env.num_actions)
          why = "policy action count does not match the environment";
      }
    }
    if (!why.empty())
      throw std::runtime_error("bad-config: source '" + src.name +
                               "' does not fit env '" + env.id + "': " + why);
  }
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg,
                      const std::vector<SourceTask>* sources, int trial_index) {
  validate_config(cfg);
  const StrategyKind strat = parse_strategy(cfg.strategy);
  if (strat.kind != StrategyKind::none && (!sources || sources->empty()))
    throw std::runtime_error("sources-not-found: strategy '" + cfg.strategy +
                             "' needs a source bundle");

  const uint64_t ts = trial_seed(cfg.seed, trial_index);
  RngStream env_rng(ts, streams::env);
  RngStream agent_rng(ts, streams::agent);
  RngStream mix_rng(ts, streams::mixture);
  RngStream strat_rng(ts, streams::strategy);
  RngStream eval_rng(ts, streams::eval);
  RngStream init_rng(ts, streams::init);

  const EnvHandle env = make_env(cfg);
  const int A = env.num_actions;
  if (sources && !sources->empty()) check_sources_fit(env, *sources);

  QTable qt;
  DqnAgent dqn;
  if (env.tabular) {
    qt = QTable(env.num_states, A, cfg.agent_lr, cfg.gamma);
  } else {
    std::vector<int> sizes{env.encoder_dim};
    sizes.insert(sizes.end(), cfg.agent_hidden.begin(), cfg.agent_hidden.end());
    sizes.push_back(A);
    dqn = DqnAgent(std::move(sizes), cfg.agent_lr, cfg.l2, cfg.gamma, cfg.batch,
                   cfg.sync_every, init_rng);
  }

  const bool needs_mix =
      strat.kind == StrategyKind::mars || strat.kind == StrategyKind::mapse;
  std::optional<MixtureNet> mix;
  if (needs_mix) {
    MixtureOptions mo;
    mo.lr = cfg.mix_lr;
    mo.l2 = cfg.mix_l2;
    mo.epochs = cfg.mix_epochs;
    mo.continuous = !env.tabular;
    std::vector<int> sizes{env.encoder_dim};
    sizes.insert(sizes.end(), cfg.mix_hidden.begin(), cfg.mix_hidden.end());
    sizes.push_back(int(sources->size()));
    mix.emplace(std::move(sizes), mo, env.encoder, init_rng);
  }

  std::optional<MarsShaper> shaper;
  TdHook hook;
  if (strat.kind == StrategyKind::mars) {
    shaper.emplace(cfg.c, cfg.gamma, &*mix, sources);
    hook = shaper->make_hook(A);
  } else if (strat.kind == StrategyKind::phi) {
    if (strat.phi_index >= int(sources->size()))
      throw std::invalid_argument("bad-config: phi index exceeds source count");
    std::vector<double> fixed(sources->size(), 0.0);
    fixed[size_t(strat.phi_index)] = 1.0;
    shaper.emplace(cfg.c, cfg.gamma, nullptr, sources, std::move(fixed));
    hook = shaper->make_hook(A);
  }

  ReplayBuffer buf(size_t(cfg.buffer_capacity), ts);
  UcbStats ucb(sources ? int(sources->size()) : 1);
  int arm = -1;

  auto greedy = [&](const State& s) {
    if (env.tabular) {
      const auto row = qt.row(s.index);
      return shaper ? shaper->greedy_act(row, s) : argmax_lowest(row);
    }
    const auto qv = dqn.q_values(s);
    return shaper ? shaper->greedy_act(qv, s) : argmax_lowest(qv);
  };
  auto eps_at = [&](long episode) {
    if (cfg.eps_schedule == "pow")
      return std::max(cfg.eps_floor, std::pow(cfg.eps_pow_base, double(episode)));
    return cfg.eps;
  };
  auto behavior = [&](const State& s, long episode) {
    if (agent_rng.uniform() < eps_at(episode))
      return int(agent_rng.uniform_int(uint64_t(A)));
    return greedy(s);
  };

  TrialResult res;

  auto run_eval = [&](long at_step) {
    double mean = 0.0, m2 = 0.0;
    for (int e = 1; e <= cfg.eval_episodes; ++e) {
      State s = env.reset(eval_rng);
      long n = 0;
      while (n < env.max_episode_steps) {
        const Transition t = env.step(s, greedy(s));
        ++n;
        if (t.terminal) break;
        s = t.s_next;
      }
      const double d = double(n) - mean;
      mean += d / e;
      m2 += d * (double(n) - mean);
    }
    EvalPoint pt;
    pt.step = at_step;
    pt.mean = mean;
    pt.stderr_ = cfg.eval_episodes > 1
                     ? std::sqrt(m2 / (cfg.eval_episodes - 1) / cfg.eval_episodes)
                     : 0.0;
    res.evals.push_back(pt);
    if (mix) {
      for (const State& s : env.probe_states) {
        const auto g = mix->gate(s);
        double sum = 0.0;
        for (double x : g) sum += x;
        res.worst_gate_sum_err =
            std::max(res.worst_gate_sum_err, std::fabs(sum - 1.0));
      }
    }
  };
  auto snapshot_due = [&](long step) {
    return std::find(cfg.snapshots.begin(), cfg.snapshots.end(), step) !=
           cfg.snapshots.end();
  };
  auto take_snapshot = [&](long cp) {
    if (!mix) return;
    for (size_t i = 0; i < env.probe_states.size(); ++i) {
      GateSnapshotRow row;
      row.checkpoint = cp;
      row.repr = env.probe_reprs[i];
      row.gate = mix->gate(env.probe_states[i]);
      res.snapshots.push_back(std::move(row));
    }
  };

  long episode = 1;
  long ep_steps = 0;
  double ep_return = 0.0;
  State s = env.reset(env_rng);
  if (strat.kind == StrategyKind::ucb) arm = ucb.select();

  for (long step = 0; step < cfg.steps; ++step) {
    if (step % cfg.eval_every == 0) run_eval(step);
    if (snapshot_due(step)) take_snapshot(step);

    int a = 0;
    switch (strat.kind) {
      case StrategyKind::none:
      case StrategyKind::mars:
      case StrategyKind::phi:
        a = behavior(s, episode);
        break;
      case StrategyKind::mapse: {
        const double p_t = std::pow(cfg.p, double(episode));
        a = mapse_act(*mix, *sources, s, p_t, strat_rng,
                      [&] { return behavior(s, episode); });
        break;
      }
      case StrategyKind::ucb: {
        const double p_t = std::pow(cfg.p, double(episode));
        if (strat_rng.uniform() < p_t)
          a = (*sources)[size_t(arm)].advised_action(s);
        else
          a = behavior(s, episode);
        break;
      }
    }

    const Transition t = env.step(s, a);
    ++ep_steps;
    ep_return += t.reward;
    const bool truncated = !t.terminal && ep_steps >= env.max_episode_steps;
    buf.push(t);

    if (env.tabular)
      qt.update(t, hook);
    else
      dqn.train_step(buf, agent_rng, hook);

    if (mix && buf.size() >= size_t(cfg.mix_batch))
      mix->train_step(buf.sample_batch(size_t(cfg.mix_batch), mix_rng), *sources);

    if (t.terminal || truncated) {
      if (strat.kind == StrategyKind::ucb) ucb.update(arm, ep_return);
      episode += 1;
      ep_steps = 0;
      ep_return = 0.0;
      s = env.reset(env_rng);
      if (strat.kind == StrategyKind::ucb) arm = ucb.select();
    } else {
      s = t.s_next;
    }
  }
  if (cfg.steps % cfg.eval_every == 0) run_eval(cfg.steps);
  if (snapshot_due(cfg.steps)) take_snapshot(cfg.steps);

  res.episodes = episode - 1;
  res.final_metric = res.evals.back().mean;
  if (mix) res.zero_evidence = mix->zero_evidence_skipped();
  return res;
}

void emit_outputs(const ExperimentConfig& cfg,
                  const std::vector<TrialResult>& trials,
                  double elapsed_seconds) {
  fs::create_directories(cfg.out_dir);
  const int T = int(trials.size());

  {
    std::ofstream curve(fs::path(cfg.out_dir) / "curve.csv", std::ios::binary);
    curve << "steps,metric_mean,metric_stderr\n";
    const size_t K = trials.empty() ? 0 : trials[0].evals.size();
    for (size_t k = 0; k < K; ++k) {
      double mean = 0.0, m2 = 0.0;
      for (int t = 1; t <= T; ++t) {
        const double v = trials[size_t(t - 1)].evals[k].mean;
        const double d = v - mean;
        mean += d / t;
        m2 += d * (v - mean);
      }
      const double se = T > 1 ? std::sqrt(m2 / (T - 1) / T) : 0.0;
      curve << trials[0].evals[k].step << ',' << format_double(mean) << ','
            << format_double(se) << '\n';
    }
  }

  {
    std::ofstream snap(fs::path(cfg.out_dir) / "gate_snapshots.csv",
                       std::ios::binary);
    snap << "checkpoint,state_repr";
    const size_t n =
        trials.empty() || trials[0].snapshots.empty()
            ? 0
            : trials[0].snapshots[0].gate.size();
    for (size_t i = 1; i <= n; ++i) snap << ",a_" << i;
    snap << '\n';
    if (!trials.empty()) {
      for (const auto& row : trials[0].snapshots) {
        snap << row.checkpoint << ',' << row.repr;
        for (double g : row.gate) snap << ',' << format_double(g);
        snap << '\n';
      }
    }
  }

  {
    json meta;
    meta["format_version"] = 1;
    meta["metric"] = make_env(cfg).metric_name;
    meta["config"] = json::parse(config_to_json(cfg));
    meta["elapsed_seconds"] = elapsed_seconds;
    meta["per_trial"] = json::array();
    for (const auto& t : trials) {
      meta["per_trial"].push_back(json{{"final_metric", t.final_metric},
                                       {"episodes", t.episodes},
                                       {"zero_evidence", t.zero_evidence},
                                       {"worst_gate_sum_err", t.worst_gate_sum_err}});
    }
    std::ofstream out(fs::path(cfg.out_dir) / "meta.json", std::ios::binary);
    out << meta.dump(2) << '\n';
  }
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const StrategyKind strat = parse_strategy(cfg.strategy);
  std::optional<std::vector<SourceTask>> sources;
  if (strat.kind != StrategyKind::none) {
    if (cfg.sources_dir.empty())
      throw std::runtime_error("bad-config: strategy '" + cfg.strategy +
                               "' requires a sources directory");
    sources = load_sources(cfg.sources_dir);
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialResult> out;
  for (int i = 0; i < cfg.trials; ++i)
    out.push_back(run_trial(cfg, sources ? &*sources : nullptr, i));
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit_outputs(cfg, out, elapsed);
  return out;
}

}  // namespace ctxfer
