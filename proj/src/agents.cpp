#include "ctxfer/agents.hpp"

#include <stdexcept>

namespace ctxfer {

QTable::QTable(int S, int A, double lr_, double gamma_)
    : num_states(S),
      num_actions(A),
      lr(lr_),
      gamma(gamma_),
      q(size_t(S) * size_t(A), 0.0) {}

void QTable::update(const Transition& t, const TdHook& hook) {
  const auto qn = row(t.s_next.index);
  const TdAdjust adj =
      hook ? hook(t, qn) : TdAdjust{t.reward, argmax_lowest(qn)};
  const double boot = t.terminal ? 0.0 : qn[size_t(adj.bootstrap_action)];
  double& cell = at(t.s.index, t.action);
  cell += lr * (adj.reward + gamma * boot - cell);
}

int QTable::greedy(int s) const { return argmax_lowest(row(s)); }

int epsilon_greedy(std::span<const double> q_row, double eps, RngStream& rng) {
  if (rng.uniform() < eps) return int(rng.uniform_int(q_row.size()));
  return argmax_lowest(q_row);
}

DqnAgent::DqnAgent(std::vector<int> sizes, double lr, double l2, double gamma,
                   int batch, int sync_every, RngStream& init_rng)
    : online_(std::move(sizes), Head::linear, l2, init_rng),
      target_(online_),
      opt_(lr),
      batch_(batch),
      sync_every_(sync_every),
      gamma_(gamma) {
  if (batch_ < 1 || sync_every_ < 1)
    throw std::invalid_argument("bad-config: batch and sync_every must be >= 1");
}

std::optional<double> DqnAgent::train_step(const ReplayBuffer& buf,
                                           RngStream& sample_rng,
                                           const TdHook& hook) {
  if (buf.size() < size_t(batch_)) return std::nullopt;
  const auto batch = buf.sample_batch(size_t(batch_), sample_rng);

  GradBuf g = online_.make_grad();
  Mlp::Trace tr;
  std::vector<double> dout(size_t(online_.output_size()));
  double loss = 0.0;
  for (const Transition& t : batch) {
    const auto qn = target_.forward(t.s_next.features);
    const TdAdjust adj =
        hook ? hook(t, qn) : TdAdjust{t.reward, argmax_lowest(qn)};
    const double boot = t.terminal ? 0.0 : qn[size_t(adj.bootstrap_action)];
    const double y = adj.reward + gamma_ * boot;

    const auto& qs = online_.forward(t.s.features, tr);
    const double err = qs[size_t(t.action)] - y;
    loss += err * err;
    std::fill(dout.begin(), dout.end(), 0.0);
    dout[size_t(t.action)] = 2.0 * err / double(batch.size());
    online_.backward(tr, dout, g, /*include_l2=*/false);
  }
  online_.add_l2_grad(g);
  adam_step(online_, opt_, g);

  ++batches_;
  if (batches_ % sync_every_ == 0) target_ = online_;
  return loss / double(batch.size());
}

}  // namespace ctxfer
