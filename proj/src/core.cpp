#include "ctxfer/core.hpp"

#include <stdexcept>

namespace ctxfer {

std::vector<double> one_hot(int i, int n) {
  if (i < 0 || i >= n) throw std::invalid_argument("one_hot: index out of range");
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return v;
}

ReplayBuffer::ReplayBuffer(size_t capacity, uint64_t seed)
    : cap_(capacity), rng_(seed, streams::buffer) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  ring_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (size_ < cap_) {
    ring_.push_back(std::move(t));
    ++size_;
  } else {
    ring_[head_] = std::move(t);
    head_ = (head_ + 1) % cap_;
  }
}

const Transition& ReplayBuffer::at(size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  return size_ < cap_ ? ring_[i] : ring_[(head_ + i) % cap_];
}

std::vector<Transition> ReplayBuffer::sample_batch(size_t n) { return sample_batch(n, rng_); }

std::vector<Transition> ReplayBuffer::sample_batch(size_t n, RngStream& rng) const {
  if (size_ < n) throw std::runtime_error("insufficient-samples: buffer smaller than batch");
  std::vector<Transition> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) out.push_back(ring_[size_t(rng.uniform_int(int(size_)))]);
  return out;
}

}  // namespace ctxfer
