#pragma once

#include <vector>

#include "ctxfer/core.hpp"
#include "ctxfer/mixture.hpp"

namespace ctxfer {

// Dense finite MDP with state rewards: P[s][a] is a distribution over next
// states, R[s] is collected in s, values discounted by gamma.
struct FiniteMdp {
  int S = 0;
  int A = 0;
  std::vector<std::vector<std::vector<double>>> P;  // S x A x S
  std::vector<double> R;                            // per state
  double gamma = 0.9;
};

// exact V^pi for a deterministic policy: solve (I - gamma * P^pi) V = R
std::vector<double> policy_value(const FiniteMdp& mdp, const std::vector<int>& pi);

// How wrong can the value of a policy get when computed in a model whose
// transition kernel differs from the truth.  lhs is the actual value gap,
// rhs the kernel-error bound gamma / (1-gamma)^2 * ||R||_inf * e_P where
// e_P is the max absolute row sum of (P_model - P_true) under pi.
struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
BoundCheck check_value_bound(const FiniteMdp& truth, const FiniteMdp& model,
                             const std::vector<int>& pi);

// Randomized self-check suites.  Each returns counts instead of asserting so
// both the test binary and the command-line verifier can report them.
struct SuiteResult {
  int total = 0;
  int failed = 0;
  double worst = 0.0;  // worst error/violation observed
};

// analytic mixture gradient vs central finite differences on random
// instances (random net shapes, sources, and batches)
SuiteResult suite_gradient_check(int instances, double tol, uint64_t seed);

// gate posterior vs independent brute-force normalization over random
// likelihood/gate draws, including hard 0/1 likelihood patterns
SuiteResult suite_posterior_check(int draws, double tol, uint64_t seed);

// value bound on random MDPs (|S| <= 6, |A| <= 3, gamma in {0.5, 0.9, 0.95})
// with randomly perturbed kernels and random policies
SuiteResult suite_value_bound(int instances, uint64_t seed);

}  // namespace ctxfer
