#pragma once

#include <string>
#include <vector>

#include "ctxfer/core.hpp"

namespace ctxfer {

// Cart-pole with four actions (full/half push, either direction) and a
// position-dependent push magnitude.  State: [x, x_dot, theta, theta_dot].
struct CartPoleSpec {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;  // half the pole length
  double dt = 0.02;          // semi-implicit Euler step
  double x_limit = 2.4;
  double theta_limit_deg = 12.0;
  double x_init_half_range = 1.5;    // x0 ~ U(-1.5, 1.5)
  double vel_init_half_range = 0.05; // other components ~ U(-0.05, 0.05)
  int max_episode_steps = 500;

  // true: |push| = f(x) varies along the track; false: constant_force
  bool position_dependent_force = true;
  double constant_force = 10.0;

  std::string name;
  static constexpr int num_actions = 4;  // 0:-F, 1:-F/2, 2:+F/2, 3:+F

  double force_at(double x) const;
  double theta_limit() const;  // radians
};

State cartpole_reset(const CartPoleSpec& spec, RngStream& rng);

struct CartPoleStep {
  State next;
  double reward = 1.0;  // +1 per step, including the failing one
  bool terminal = false;
};

CartPoleStep cartpole_step(const CartPoleSpec& spec, const State& s, int action);

// target task: surface with force profile f(x) in [5, 75]
CartPoleSpec make_transfer_cartpole();
// sources: constant F=5 (rough), constant F=75 (slippery),
// and constant F=20 with a doubled pole
std::vector<CartPoleSpec> make_source_cartpoles(const CartPoleSpec& target);

}  // namespace ctxfer
