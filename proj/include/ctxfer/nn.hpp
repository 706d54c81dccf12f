#pragma once

#include <span>
#include <string>
#include <vector>

#include "ctxfer/rng.hpp"

namespace ctxfer {

// Output heads: identity, softmax over the output vector, or per-dimension
// tanh squashing.  Hidden activations are always ReLU.
enum class Head { linear, softmax, tanh_squash };

struct GradBuf {
  std::vector<std::vector<double>> w;  // same shapes as Mlp::w / Mlp::b
  std::vector<std::vector<double>> b;
  void zero();
  void scale(double a);
  void add(const GradBuf& other, double a = 1.0);
  double max_abs() const;
};

// Minimal dense feed-forward net, all math in double.  Weights are row-major
// (out x in) per layer.  Deliberately no SIMD/library back end: the nets here
// are a few thousand parameters and exact reproducibility matters more than
// throughput.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, hidden..., out}; Glorot-style uniform init U(-L, L) with
  // L = sqrt(6 / (fan_in + fan_out)), biases zero.
  Mlp(std::vector<int> sizes, Head head, double l2, RngStream& rng);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Head head() const { return head_; }
  double l2() const { return l2_; }
  size_t num_params() const;

  // Cached intermediates for one forward pass; reusable across calls to
  // avoid churn in training loops.
  struct Trace {
    std::vector<std::vector<double>> act;  // act[0] = input, act[L] = pre-head
    std::vector<double> out;               // head output
  };

  std::vector<double> forward(std::span<const double> x) const;
  const std::vector<double>& forward(std::span<const double> x, Trace& tr) const;

  // Accumulates dLoss/dparams into g given dLoss/d(head output).  When
  // include_l2 is set, adds the 2*l2*w ridge term (so a zero upstream yields
  // the pure penalty gradient); batch loops pass false and add it once.
  void backward(const Trace& tr, std::span<const double> dout, GradBuf& g,
                bool include_l2 = true) const;
  // Same, but upstream is dLoss/d(pre-head logits): skips the head Jacobian.
  void backward_logits(const Trace& tr, std::span<const double> dlogits, GradBuf& g,
                       bool include_l2 = false) const;

  void add_l2_grad(GradBuf& g) const;  // g.w += 2*l2*w
  GradBuf make_grad() const;

  // flat parameter access (layer-major, weights then bias per layer) — used
  // by finite-difference checks and Adam
  double get_param(size_t i) const;
  void set_param(size_t i, double v);

  std::vector<std::vector<double>> w, b;  // public: trainers touch these

  std::string serialize() const;                 // JSON, exact round-trip
  static Mlp deserialize(const std::string& js);

 private:
  std::vector<int> sizes_;
  Head head_ = Head::linear;
  double l2_ = 0.0;

  void apply_head(const std::vector<double>& z, std::vector<double>& out) const;
};

// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  GradBuf m, v;
  explicit AdamState(double lr_ = 1e-3) : lr(lr_) {}
};

void adam_step(Mlp& net, AdamState& st, const GradBuf& g);

int argmax_lowest(std::span<const double> v);  // ties resolve to lowest index

}  // namespace ctxfer
