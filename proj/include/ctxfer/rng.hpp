#pragma once

#include <cstdint>
#include <span>

namespace ctxfer {

// splitmix64 finalizer: bijective avalanche mix on 64 bits.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based stream: output k is a pure function of (seed, stream, k), so
// independently-seeded consumers never perturb each other's draws.  We avoid
// std:: distributions on purpose: their output is not specified bit-for-bit
// across standard libraries, and run outputs must be byte-reproducible.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t seed, uint64_t stream)
      : key_(mix64(mix64(seed + 0x632be59bd9b4e019ull) ^ mix64(stream))) {}

  uint64_t next_u64() { return mix64(key_ + ++ctr_ * 0x9e3779b97f4a7c15ull); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform in {0, ..., n-1} via 128-bit multiply (bias < n/2^64, and more
  // importantly: deterministic everywhere)
  int uniform_int(int n) {
    return int((static_cast<unsigned __int128>(next_u64()) *
                static_cast<unsigned __int128>(n)) >> 64);
  }

  // index i with probability w[i]/sum(w); w non-negative, sum > 0
  int categorical(std::span<const double> w) {
    double total = 0.0;
    for (double x : w) total += x;
    double u = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return int(i);
    }
    return int(w.size()) - 1;
  }

 private:
  uint64_t key_;
  uint64_t ctr_ = 0;
};

// Stream ids for the per-trial sub-streams; keeping them fixed keeps ablations
// seed-matched (a strategy that skips a consumer leaves other streams intact).
namespace streams {
constexpr uint64_t env = 1, agent = 2, mixture = 3, strategy = 4, buffer = 5,
                   eval = 6, pretrain = 7, init = 8;
}

}  // namespace ctxfer
