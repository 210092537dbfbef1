#pragma once

#include <limits>
#include <random>
#include <span>
#include <vector>

#include "d3q/nn/checkpoint.hpp"
#include "d3q/nn/layers.hpp"
#include "d3q/nn/optim.hpp"
#include "d3q/replay.hpp"

namespace d3q {

struct QAgentConfig {
  int state_dim = 0;
  int num_actions = 0;
  int hidden = 80;
  double gamma = 0.9;
  double epsilon = 0.05;
  nn::RmsPropConfig optimizer;
};

// Lowest-index maximum over the active entries, or -1 if none are active.
inline int masked_argmax(const Eigen::VectorXd& values, const std::vector<bool>& mask) {
  int best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    if (best < 0 || values[i] > best_v) {
      best = i;
      best_v = values[i];
    }
  }
  return best;
}

// Value network Q(s, .; theta) with a fixed-target copy Q'.
class QAgent {
 public:
  QAgent() = default;

  template <class Rng>
  QAgent(const QAgentConfig& cfg, Rng& rng)
      : cfg_(cfg),
        q_net_("q", cfg.state_dim, {{cfg.hidden, nn::Activation::relu},
                                    {cfg.num_actions, nn::Activation::identity}}),
        opt_(cfg.optimizer) {
    q_net_.init(rng);
    target_net_ = q_net_;
  }

  const QAgentConfig& config() const { return cfg_; }
  double epsilon() const { return cfg_.epsilon; }
  void set_epsilon(double e) { cfg_.epsilon = e; }
  double gamma() const { return cfg_.gamma; }
  int num_actions() const { return cfg_.num_actions; }

  Eigen::VectorXd q_values(const Eigen::VectorXd& s) const { return q_net_.forward(s); }
  Eigen::VectorXd target_values(const Eigen::VectorXd& s) const { return target_net_.forward(s); }

  int greedy_action(const Eigen::VectorXd& s, const std::vector<bool>& mask) const {
    const int a = masked_argmax(q_values(s), mask);
    if (a < 0) throw SchemaViolation("no active agent action");
    return a;
  }

  // Epsilon-greedy over active actions. Always draws the exploration coin so
  // the RNG stream does not depend on network outputs.
  template <class Rng>
  int select_action(const Eigen::VectorXd& s, const std::vector<bool>& mask, Rng& rng) const {
    std::vector<int> active;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i)
      if (mask[i]) active.push_back(i);
    if (active.empty()) throw SchemaViolation("no active agent action");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < cfg_.epsilon) {
      std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
      return active[pick(rng)];
    }
    return greedy_action(s, mask);
  }

  // y = r for terminal tuples, r + gamma * max_{a' active} Q'(s', a') otherwise.
  Eigen::VectorXd td_targets(std::span<const Experience* const> batch,
                             const std::vector<bool>& mask) const {
    const auto n = static_cast<Eigen::Index>(batch.size());
    nn::Matrix next(cfg_.state_dim, n);
    for (Eigen::Index i = 0; i < n; ++i) next.col(i) = batch[i]->next_state;
    const nn::Matrix q = target_net_.forward(next);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Experience& e = *batch[i];
      y[i] = e.reward;
      if (!e.terminal) y[i] += cfg_.gamma * q(masked_argmax(q.col(i), mask), i);
    }
    return y;
  }

  // Mean squared TD error on the batch without touching parameters.
  double loss(std::span<const Experience* const> batch, const std::vector<bool>& mask) const {
    const Eigen::VectorXd y = td_targets(batch, mask);
    nn::Matrix states(cfg_.state_dim, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) states.col(i) = batch[i]->state;
    const nn::Matrix q = q_net_.forward(states);
    double l = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double d = q(batch[i]->action, i) - y[i];
      l += d * d;
    }
    return l / static_cast<double>(batch.size());
  }

  // Accumulates dL/dtheta for the batch into the online network gradients.
  double accumulate_gradients(std::span<const Experience* const> batch,
                              const std::vector<bool>& mask) {
    const Eigen::VectorXd y = td_targets(batch, mask);
    const auto n = static_cast<Eigen::Index>(batch.size());
    nn::Matrix states(cfg_.state_dim, n);
    for (Eigen::Index i = 0; i < n; ++i) states.col(i) = batch[i]->state;
    nn::DenseNet::Cache cache;
    const nn::Matrix q = q_net_.forward(states, cache);
    nn::Matrix dq = nn::Matrix::Zero(q.rows(), n);
    double l = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = q(batch[i]->action, i) - y[i];
      l += d * d;
      dq(batch[i]->action, i) = 2.0 * d / static_cast<double>(n);
    }
    q_net_.backward(cache, dq);
    return l / static_cast<double>(n);
  }

  // One clipped RMSProp step on the given batch; returns the pre-step loss.
  double train_on(std::span<const Experience* const> batch, const std::vector<bool>& mask) {
    if (batch.empty()) throw EmptyBuffer("empty training batch");
    nn::zero_grads(q_net_.params());
    const double l = accumulate_gradients(batch, mask);
    if (!std::isfinite(l)) throw NumericsError("non-finite TD loss");
    opt_.step(q_net_.params());
    return l;
  }

  template <class Rng>
  double train_batch(const ReplayBuffer<Experience>& buffer, const std::vector<bool>& mask,
                     Rng& rng, std::size_t batch_size = 16) {
    if (buffer.empty()) throw EmptyBuffer("training on an empty replay buffer");
    const auto batch = buffer.sample(rng, batch_size);
    return train_on(batch, mask);
  }

  void sync_target() { target_net_ = q_net_; }

  nn::DenseNet& q_net() { return q_net_; }
  const nn::DenseNet& q_net() const { return q_net_; }
  nn::DenseNet& target_net() { return target_net_; }
  const nn::DenseNet& target_net() const { return target_net_; }

  void save(const std::string& path) { nn::save_checkpoint_file(path, q_net_.params()); }
  void load(const std::string& path) {
    nn::load_checkpoint_file(path, q_net_.params());
    sync_target();
  }

 private:
  QAgentConfig cfg_;
  nn::DenseNet q_net_;
  nn::DenseNet target_net_;
  nn::RmsProp opt_;
};

}  // namespace d3q
