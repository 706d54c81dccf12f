#include "ctxfer/cartpole.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctxfer {

double CartPoleSpec::theta_limit() const {
  return theta_limit_deg * std::numbers::pi / 180.0;
}

double CartPoleSpec::force_at(double x) const {
  if (!position_dependent_force) return constant_force;
  // smooth [5, 75] profile: 75 where cos(5x)=1, 40 at the zero crossings,
  // 5 where cos(5x)=-1; strictly increasing in cos(5x)
  const double c = std::cos(5.0 * x);
  return 35.0 * std::sqrt(37.0 / (1.0 + 36.0 * c * c)) * c + 40.0;
}

State cartpole_reset(const CartPoleSpec& spec, RngStream& rng) {
  State s;
  s.features.resize(4);
  s.features[0] = rng.uniform(-spec.x_init_half_range, spec.x_init_half_range);
  for (int i = 1; i < 4; ++i)
    s.features[size_t(i)] = rng.uniform(-spec.vel_init_half_range, spec.vel_init_half_range);
  return s;
}

CartPoleStep cartpole_step(const CartPoleSpec& spec, const State& s, int action) {
  if (action < 0 || action >= CartPoleSpec::num_actions)
    throw std::invalid_argument("bad-action: cartpole actions are 0..3");
  if (s.features.size() != 4)
    throw std::invalid_argument("cartpole_step: state must have 4 features");
  const double x = s.features[0], x_dot = s.features[1];
  const double theta = s.features[2], theta_dot = s.features[3];

  const double fmag = spec.force_at(x);
  const double force = (action == 0 ? -fmag : action == 1 ? -0.5 * fmag
                                          : action == 2 ? 0.5 * fmag : fmag);

  const double total_mass = spec.cart_mass + spec.pole_mass;
  const double pml = spec.pole_mass * spec.half_length;
  const double cth = std::cos(theta), sth = std::sin(theta);
  const double tmp = (force + pml * theta_dot * theta_dot * sth) / total_mass;
  const double theta_acc = (spec.gravity * sth - cth * tmp) /
      (spec.half_length * (4.0 / 3.0 - spec.pole_mass * cth * cth / total_mass));
  const double x_acc = tmp - pml * theta_acc * cth / total_mass;

  // semi-implicit Euler: velocities first, then positions with new velocities
  CartPoleStep out;
  out.next.features.resize(4);
  const double nx_dot = x_dot + spec.dt * x_acc;
  const double nth_dot = theta_dot + spec.dt * theta_acc;
  out.next.features[0] = x + spec.dt * nx_dot;
  out.next.features[1] = nx_dot;
  out.next.features[2] = theta + spec.dt * nth_dot;
  out.next.features[3] = nth_dot;
  out.reward = 1.0;
  out.terminal = std::fabs(out.next.features[0]) > spec.x_limit ||
                 std::fabs(out.next.features[2]) > spec.theta_limit();
  return out;
}

CartPoleSpec make_transfer_cartpole() {
  CartPoleSpec s;
  s.position_dependent_force = true;
  s.name = "cartpole";
  return s;
}

std::vector<CartPoleSpec> make_source_cartpoles(const CartPoleSpec& target) {
  std::vector<CartPoleSpec> out(3, target);
  out[0].position_dependent_force = false;
  out[0].constant_force = 5.0;
  out[0].name = target.name + "-rough";
  out[1].position_dependent_force = false;
  out[1].constant_force = 75.0;
  out[1].name = target.name + "-slippery";
  out[2].position_dependent_force = false;
  out[2].constant_force = 20.0;
  out[2].half_length = 2.0 * target.half_length;
  out[2].name = target.name + "-longpole";
  return out;
}

}  // namespace ctxfer
