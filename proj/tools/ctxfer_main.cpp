#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ctxfer/experiment.hpp"
#include "ctxfer/pretrain.hpp"
#include "ctxfer/verify.hpp"

namespace {

int cmd_pretrain(const std::string& env, const std::string& out, uint64_t seed,
                 const std::string& maze_file, int rooms_x, int rooms_y) {
  const auto t0 = std::chrono::steady_clock::now();
  const ctxfer::PretrainReport rep =
      ctxfer::pretrain_sources(env, out, seed, maze_file, rooms_x, rooms_y);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("pretrained %zu sources for %s -> %s (%.1fs)\n", rep.names.size(),
              env.c_str(), out.c_str(), secs);
  for (size_t i = 0; i < rep.names.size(); ++i) {
    std::printf("  %-22s env_steps=%-8ld transitions=%-8ld", rep.names[i].c_str(),
                rep.env_steps[i], rep.transitions[i]);
    if (rep.dyn_holdout_mse[i] > 0.0)
      std::printf(" holdout_mse=%.3g", rep.dyn_holdout_mse[i]);
    std::printf("\n");
  }
  return 0;
}

int cmd_run(ctxfer::ExperimentConfig cfg) {
  const auto results = ctxfer::run_experiment(cfg);
  std::printf("%s/%s: %d trial(s), %ld steps each -> %s\n", cfg.env.c_str(),
              cfg.strategy.c_str(), cfg.trials, cfg.steps, cfg.out_dir.c_str());
  for (size_t i = 0; i < results.size(); ++i)
    std::printf("  trial %zu: final_metric=%s episodes=%ld\n", i,
                ctxfer::format_double(results[i].final_metric).c_str(),
                results[i].episodes);
  return 0;
}

int cmd_verify() {
  int failures = 0;
  {
    const auto r = ctxfer::suite_gradient_check(20, 1e-4, 20260815);
    std::printf("gradient-check:  %d/%d ok, worst rel err %.3g\n",
                r.total - r.failed, r.total, r.worst);
    failures += r.failed;
  }
  {
    const auto r = ctxfer::suite_posterior_check(1000, 1e-12, 20260816);
    std::printf("posterior-check: %d/%d ok, worst abs err %.3g\n",
                r.total - r.failed, r.total, r.worst);
    failures += r.failed;
  }
  {
    const auto r = ctxfer::suite_value_bound(1000, 20260817);
    std::printf("value-bound:     %d/%d ok, worst lhs-rhs %.3g\n",
                r.total - r.failed, r.total, r.worst);
    failures += r.failed;
  }
  std::printf(failures == 0 ? "verify: PASS\n" : "verify: FAIL (%d)\n", failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual source-task mixtures for transfer RL"};
  app.require_subcommand(1);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "solve source tasks and fit their dynamics models");
  std::string pre_env, pre_out, maze_file;
  uint64_t pre_seed = 1;
  int rooms_x = 2, rooms_y = 2;
  pre->add_option("--env", pre_env, "maze | maze10 | cartpole")->required();
  pre->add_option("--out", pre_out, "bundle output directory")->required();
  pre->add_option("--seed", pre_seed, "pretraining seed");
  pre->add_option("--maze-file", maze_file, "custom maze layout (maze envs)");
  pre->add_option("--rooms-x", rooms_x, "room grid columns for a custom maze");
  pre->add_option("--rooms-y", rooms_y, "room grid rows for a custom maze");

  // run
  auto* run = app.add_subcommand("run", "train on the target task and emit curves");
  std::string run_env = "maze", run_strategy = "none", sources, out_dir = "out",
              config_path;
  long steps = -1;
  int trials = 1;
  uint64_t run_seed = 1;
  double c_override = -1.0, p_override = -1.0;
  run->add_option("--env", run_env, "maze | maze10 | cartpole");
  run->add_option("--strategy", run_strategy, "none | mars | mapse | ucb | phi<i>");
  run->add_option("--steps", steps, "environment steps per trial");
  run->add_option("--trials", trials, "seed-matched trials");
  run->add_option("--seed", run_seed, "base seed (trial i uses seed*10007+i)");
  run->add_option("--sources", sources, "pretrained source bundle directory");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--config", config_path, "JSON config (overrides env defaults)");
  run->add_option("--c", c_override, "shaping scale");
  run->add_option("--p", p_override, "advice-following base probability");
  std::string run_maze_file;
  int run_rooms_x = 2, run_rooms_y = 1;
  run->add_option("--maze-file", run_maze_file, "custom maze layout (maze envs)");
  run->add_option("--rooms-x", run_rooms_x, "room grid columns for a custom maze");
  run->add_option("--rooms-y", run_rooms_y, "room grid rows for a custom maze");

  // verify
  auto* ver = app.add_subcommand("verify", "run the randomized self-check suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed())
      return cmd_pretrain(pre_env, pre_out, pre_seed, maze_file, rooms_x, rooms_y);
    if (run->parsed()) {
      ctxfer::ExperimentConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("bad-config: cannot read " + config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = ctxfer::config_from_json(ss.str());
        // explicit flags still win over the config file
        if (run->count("--env")) cfg.env = run_env;
        if (run->count("--strategy")) cfg.strategy = run_strategy;
      } else {
        cfg = ctxfer::default_config(run_env, run_strategy);
      }
      if (run->count("--steps")) cfg.steps = steps;
      if (run->count("--trials")) cfg.trials = trials;
      if (run->count("--seed")) cfg.seed = run_seed;
      if (run->count("--sources")) cfg.sources_dir = sources;
      if (run->count("--out")) cfg.out_dir = out_dir;
      if (run->count("--c")) cfg.c = c_override;
      if (run->count("--p")) cfg.p = p_override;
      if (run->count("--maze-file")) cfg.maze_file = run_maze_file;
      if (run->count("--rooms-x")) cfg.rooms_x = run_rooms_x;
      if (run->count("--rooms-y")) cfg.rooms_y = run_rooms_y;
      return cmd_run(std::move(cfg));
    }
    if (ver->parsed()) return cmd_verify();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
