#pragma once

#include <cstddef>
#include <vector>

#include "ctxfer/rng.hpp"

namespace ctxfer {

// A state is either a real feature vector (continuous control) or a discrete
// cell index (index >= 0, features empty).  Networks that need a vector view
// of a discrete state one-hot encode the index.
struct State {
  std::vector<double> features;
  int index = -1;
};

struct Transition {
  State s;
  int action = 0;
  double reward = 0.0;
  State s_next;
  bool terminal = false;  // true only for real termination, not step limits
};

// canonical one-hot: e_i in R^n
std::vector<double> one_hot(int i, int n);

// Fixed-capacity FIFO transition store with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(size_t capacity, uint64_t seed);

  void push(Transition t);  // evicts the oldest element when full

  // n uniform draws with replacement; throws "insufficient-samples" if
  // size() < n.  The overload taking a stream lets several consumers sample
  // from one buffer without sharing RNG state.
  std::vector<Transition> sample_batch(size_t n);
  std::vector<Transition> sample_batch(size_t n, RngStream& rng) const;

  size_t size() const { return size_; }
  size_t capacity() const { return cap_; }
  // logical order: at(0) is the oldest stored transition
  const Transition& at(size_t i) const;

 private:
  std::vector<Transition> ring_;
  size_t cap_;
  size_t head_ = 0;  // next write slot
  size_t size_ = 0;
  RngStream rng_;
};

}  // namespace ctxfer
