#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "d3q/actions.hpp"
#include "d3q/nn/checkpoint.hpp"
#include "d3q/nn/layers.hpp"
#include "d3q/nn/optim.hpp"
#include "d3q/replay.hpp"
#include "d3q/tracker.hpp"

namespace d3q {

struct WorldModelConfig {
  int state_dim = kStateDim;
  int num_actions = 0;
  int num_templates = 0;
  int encoder = 80;
  int shared = 160;
  double reward_scale = kMaxTurns;  // rewards are regressed as r / reward_scale
  double timeout_penalty = kMaxTurns;  // failure term removed from turn-limit tuples
  double weight_user = 1.0;
  double weight_reward = 1.0;
  double weight_terminal = 1.0;
  nn::RmsPropConfig optimizer;
};

struct WorldModelLoss {
  double user = 0.0;      // cross-entropy of the user template
  double reward = 0.0;    // squared error on the scaled reward
  double terminal = 0.0;  // binary cross-entropy of the end flag
  double total() const { return user + reward + terminal; }
};

struct SimulatedStep {
  int user_template = 0;
  double reward = 0.0;
  bool terminal = false;
};

// Multi-task environment model G(s, a): separate tanh encoders for the state
// and the one-hot action, a shared tanh layer, and three heads (softmax user
// template, linear scaled reward, sigmoid terminal probability).
class WorldModel {
 public:
  struct Prediction {
    nn::Matrix user;      // templates x batch, columns sum to 1
    nn::Matrix reward;    // 1 x batch, scaled
    nn::Matrix terminal;  // 1 x batch, in (0,1)
  };

  WorldModel() = default;

  template <class Rng>
  WorldModel(const WorldModelConfig& cfg, Rng& rng)
      : cfg_(cfg),
        state_enc_("wm.state", cfg.state_dim, cfg.encoder, nn::Activation::tanh),
        action_enc_("wm.action", cfg.num_actions, cfg.encoder, nn::Activation::tanh),
        shared_("wm.shared", 2 * cfg.encoder, cfg.shared, nn::Activation::tanh),
        reward_head_("wm.reward", cfg.shared, 1, nn::Activation::identity),
        user_head_("wm.user", cfg.shared, cfg.num_templates, nn::Activation::softmax),
        term_head_("wm.terminal", cfg.shared, 1, nn::Activation::sigmoid),
        opt_(cfg.optimizer) {
    reinitialize(rng);
  }

  template <class Rng>
  void reinitialize(Rng& rng) {
    for (nn::Dense* d : layers()) d->init(rng);
    opt_.reset();
  }

  const WorldModelConfig& config() const { return cfg_; }

  nn::Matrix one_hot_actions(std::span<const int> actions) const {
    nn::Matrix a = nn::Matrix::Zero(cfg_.num_actions, static_cast<Eigen::Index>(actions.size()));
    for (std::size_t i = 0; i < actions.size(); ++i) a(actions[i], i) = 1.0;
    return a;
  }

  Prediction predict(const nn::Matrix& states, const nn::Matrix& actions) const {
    nn::Matrix h(2 * cfg_.encoder, states.cols());
    h.topRows(cfg_.encoder) = state_enc_.forward(states);
    h.bottomRows(cfg_.encoder) = action_enc_.forward(actions);
    const nn::Matrix shared = shared_.forward(h);
    return {user_head_.forward(shared), reward_head_.forward(shared), term_head_.forward(shared)};
  }

  // Samples o from the softmax head (restricted to active templates), t from
  // the terminal head, and returns the de-scaled reward.
  template <class Rng>
  SimulatedStep simulate_step(const Eigen::VectorXd& s, int action,
                              const std::vector<bool>& template_mask, Rng& rng) const {
    const int a[] = {action};
    const Prediction p = predict(s, one_hot_actions(a));
    std::vector<double> weights(static_cast<std::size_t>(cfg_.num_templates));
    double total = 0.0;
    for (int i = 0; i < cfg_.num_templates; ++i) {
      weights[i] = template_mask[i] ? p.user(i, 0) : 0.0;
      total += weights[i];
    }
    if (!(total > 0.0))
      for (int i = 0; i < cfg_.num_templates; ++i) weights[i] = template_mask[i] ? 1.0 : 0.0;
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    SimulatedStep out;
    out.user_template = pick(rng);
    out.terminal = coin(rng) < p.terminal(0, 0);
    out.reward = p.reward(0, 0) * cfg_.reward_scale;
    return out;
  }

  WorldModelLoss loss(std::span<const Experience* const> batch) const {
    return forward_pass(batch).loss;
  }

  // Accumulates gradients of the summed loss into the parameters.
  WorldModelLoss accumulate_gradients(std::span<const Experience* const> batch) {
    const Pass pass = forward_pass(batch);
    nn::Matrix dshared = reward_head_.backward_preactivation(pass.cr, pass.dr);
    dshared += user_head_.backward_preactivation(pass.cu, pass.du);
    dshared += term_head_.backward_preactivation(pass.ct, pass.dt);
    const nn::Matrix dh = shared_.backward(pass.ch, dshared);
    state_enc_.backward(pass.cs, dh.topRows(cfg_.encoder));
    action_enc_.backward(pass.ca, dh.bottomRows(cfg_.encoder));
    return pass.loss;
  }

  WorldModelLoss train_on(std::span<const Experience* const> batch) {
    if (batch.empty()) throw EmptyBuffer("empty world-model batch");
    nn::zero_grads(params());
    const WorldModelLoss l = accumulate_gradients(batch);
    if (!std::isfinite(l.total())) throw NumericsError("non-finite world-model loss");
    opt_.step(params());
    return l;
  }

  template <class Rng>
  WorldModelLoss train_batch(const ReplayBuffer<Experience>& real, Rng& rng,
                             std::size_t batch_size = 16) {
    if (real.empty()) throw EmptyBuffer("world model needs real experience");
    return train_on(real.sample(rng, batch_size));
  }

  nn::ParamRefs params() {
    nn::ParamRefs out;
    for (nn::Dense* d : layers())
      for (nn::Param* p : d->params()) out.push_back(p);
    return out;
  }

  nn::ParamRefs shared_params() {
    nn::ParamRefs out;
    for (nn::Dense* d : {&state_enc_, &action_enc_, &shared_})
      for (nn::Param* p : d->params()) out.push_back(p);
    return out;
  }

  void save(const std::string& path) { nn::save_checkpoint_file(path, params()); }
  void load(const std::string& path) { nn::load_checkpoint_file(path, params()); }

 private:
  std::vector<nn::Dense*> layers() {
    return {&state_enc_, &action_enc_, &shared_, &reward_head_, &user_head_, &term_head_};
  }

  // Forward caches plus loss gradients w.r.t. each head's pre-activation.
  struct Pass {
    nn::Dense::Cache cs, ca, ch, cr, cu, ct;
    nn::Matrix dr, du, dt;
    WorldModelLoss loss;
  };

  Pass forward_pass(std::span<const Experience* const> batch) const {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const double inv = 1.0 / static_cast<double>(n);
    nn::Matrix states(cfg_.state_dim, n);
    std::vector<int> actions(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      states.col(i) = batch[i]->state;
      actions[i] = batch[i]->action;
    }
    const nn::Matrix act = one_hot_actions(actions);

    Pass pass;
    nn::Matrix h(2 * cfg_.encoder, n);
    h.topRows(cfg_.encoder) = state_enc_.forward(states, pass.cs);
    h.bottomRows(cfg_.encoder) = action_enc_.forward(act, pass.ca);
    const nn::Matrix shared = shared_.forward(h, pass.ch);
    const nn::Matrix r = reward_head_.forward(shared, pass.cr);
    const nn::Matrix u = user_head_.forward(shared, pass.cu);
    const nn::Matrix t = term_head_.forward(shared, pass.ct);

    WorldModelLoss& l = pass.loss;
    nn::Matrix& dr = pass.dr;
    nn::Matrix& du = pass.du;
    nn::Matrix& dt = pass.dt;
    dr.resize(1, n);
    du = u;
    dt.resize(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Experience& e = *batch[i];
      // The turn limit is applied by the rollout itself; a cut tuple teaches
      // the model what the user did, i.e. an ordinary non-terminal turn.
      const double target_r = (e.timeout ? e.reward + cfg_.timeout_penalty : e.reward) /
                              cfg_.reward_scale;
      const double diff = r(0, i) - target_r;
      l.reward += diff * diff * inv;
      dr(0, i) = cfg_.weight_reward * 2.0 * diff * inv;

      l.user -= std::log(std::max(u(e.user_template, i), 1e-300)) * inv;
      du(e.user_template, i) -= 1.0;

      const double y = e.terminal && !e.timeout ? 1.0 : 0.0;
      const double p = t(0, i);
      l.terminal -= (y * std::log(std::max(p, 1e-300)) +
                     (1.0 - y) * std::log(std::max(1.0 - p, 1e-300))) * inv;
      dt(0, i) = cfg_.weight_terminal * (p - y) * inv;
    }
    du *= cfg_.weight_user * inv;
    l.user *= cfg_.weight_user;
    l.reward *= cfg_.weight_reward;
    l.terminal *= cfg_.weight_terminal;
    return pass;
  }

  WorldModelConfig cfg_;
  nn::Dense state_enc_, action_enc_, shared_, reward_head_, user_head_, term_head_;
  nn::RmsProp opt_;
};

}  // namespace d3q
