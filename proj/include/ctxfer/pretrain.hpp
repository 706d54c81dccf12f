#pragma once

#include <string>
#include <vector>

#include "ctxfer/sources.hpp"

namespace ctxfer {

struct PretrainReport {
  std::vector<std::string> names;
  std::vector<long> env_steps;     // environment steps spent per source
  std::vector<long> transitions;   // transitions collected per source
  std::vector<double> dyn_holdout_mse;  // continuous models only, 0 for tabular
};

// Solves every source task of `env` (maze | maze10 | cartpole), fits a
// forward model of each source's dynamics, and writes the bundle to out_dir.
// A nonempty maze_file replaces the bundled maze layout (maze envs only),
// partitioned into rooms_x x rooms_y rooms.  Throws "pretrain-failed" when a
// source policy cannot be certified or a dynamics model misses its accuracy
// gate.
PretrainReport pretrain_sources(const std::string& env, const std::string& out_dir,
                                uint64_t seed, const std::string& maze_file = "",
                                int rooms_x = 2, int rooms_y = 2);

}  // namespace ctxfer
