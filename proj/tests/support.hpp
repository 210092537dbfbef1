#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <random>
#include <vector>

#include "d3q/discriminator.hpp"
#include "d3q/dqn.hpp"
#include "d3q/nn/gradcheck.hpp"
#include "d3q/world_model.hpp"

namespace d3q::testing {

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline std::vector<Experience> random_tuples(int n, int state_dim, int actions, int templates,
                                             std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_a(0, actions - 1), pick_t(0, templates - 1);
  std::uniform_real_distribution<double> r(-2.0, 2.0);
  std::bernoulli_distribution coin(0.3);
  std::vector<Experience> out;
  for (int i = 0; i < n; ++i) {
    Experience e;
    e.state = random_vector(state_dim, rng);
    e.next_state = random_vector(state_dim, rng);
    e.action = pick_a(rng);
    e.user_template = pick_t(rng);
    e.reward = r(rng);
    e.terminal = coin(rng);
    e.timeout = e.terminal && coin(rng);
    out.push_back(e);
  }
  return out;
}

inline std::vector<const Experience*> pointers(const std::vector<Experience>& v) {
  std::vector<const Experience*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

// Small randomized instances of each network; every one reports the worst
// relative error between backprop and central differences.

inline nn::GradCheckResult gradcheck_qnet(std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  QAgentConfig qc;
  qc.state_dim = 7;
  qc.num_actions = 4;
  qc.hidden = 6;
  QAgent agent(qc, rng);
  for (nn::Param* p : agent.target_net().params()) p->value = p->value.unaryExpr([&](double) {
      return std::normal_distribution<double>(0.0, 0.5)(rng);
    });
  const auto tuples = random_tuples(5, qc.state_dim, qc.num_actions, 1, rng);
  const auto batch = pointers(tuples);
  const std::vector<bool> mask(qc.num_actions, true);
  nn::zero_grads(agent.q_net().params());
  agent.accumulate_gradients(batch, mask);
  return nn::check_gradients(agent.q_net().params(), [&] { return agent.loss(batch, mask); }, h);
}

inline nn::GradCheckResult gradcheck_world_model(std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  WorldModelConfig wc;
  wc.state_dim = 7;
  wc.num_actions = 4;
  wc.num_templates = 5;
  wc.encoder = 6;
  wc.shared = 8;
  wc.reward_scale = 2.0;
  WorldModel wm(wc, rng);
  const auto tuples = random_tuples(5, wc.state_dim, wc.num_actions, wc.num_templates, rng);
  const auto batch = pointers(tuples);
  nn::zero_grads(wm.params());
  wm.accumulate_gradients(batch);
  return nn::check_gradients(wm.params(), [&] { return wm.loss(batch).total(); }, h);
}

inline std::vector<EpisodeRecord> random_sessions(int n, int len, int dim, std::mt19937_64& rng) {
  std::vector<EpisodeRecord> out(static_cast<std::size_t>(n));
  for (auto& ep : out)
    for (int t = 0; t < len; ++t) ep.features.push_back(random_vector(dim, rng));
  return out;
}

inline std::vector<const EpisodeRecord*> pointers(const std::vector<EpisodeRecord>& v) {
  std::vector<const EpisodeRecord*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

inline nn::GradCheckResult gradcheck_discriminator(std::uint64_t seed, int length = 5,
                                                   double h = 1e-5) {
  std::mt19937_64 rng(seed);
  DiscriminatorConfig dc;
  dc.feature_dim = 7;
  dc.encoder = 6;
  dc.lstm_hidden = 5;
  dc.output_hidden = 4;
  Discriminator d(dc, rng);
  const auto real = random_sessions(3, length, dc.feature_dim, rng);
  const auto sim = random_sessions(3, length, dc.feature_dim, rng);
  const auto rp = pointers(real), sp = pointers(sim);
  nn::zero_grads(d.params());
  d.accumulate_gradients(rp, sp);
  return nn::check_gradients(d.params(), [&] { return d.loss(rp, sp); }, h);
}

// Three-state deterministic chain. Action 0 moves left, 1 moves right.
// Left from state 0 ends the episode with 0.85, right from state 2 ends it
// with 1.0; every other move pays nothing.
struct ChainMdp {
  static constexpr int states = 3;
  static constexpr int actions = 2;
  static constexpr double gamma = 0.9;

  struct Outcome {
    int next;
    double reward;
    bool terminal;
  };

  static Outcome step(int s, int a) {
    if (s == 0 && a == 0) return {0, 0.85, true};
    if (s == 2 && a == 1) return {2, 1.0, true};
    return {a == 0 ? s - 1 : s + 1, 0.0, false};
  }

  static Eigen::VectorXd encode(int s) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(states);
    v[s] = 1.0;
    return v;
  }

  // Greedy policy from value iteration run to convergence.
  static std::vector<int> optimal_policy() {
    std::vector<double> v(states, 0.0);
    for (int it = 0; it < 1000; ++it) {
      std::vector<double> nv(states);
      for (int s = 0; s < states; ++s) {
        double best = -1e300;
        for (int a = 0; a < actions; ++a) {
          const Outcome o = step(s, a);
          best = std::max(best, o.reward + (o.terminal ? 0.0 : gamma * v[o.next]));
        }
        nv[s] = best;
      }
      v = nv;
    }
    std::vector<int> pi(states);
    for (int s = 0; s < states; ++s) {
      double best = -1e300;
      for (int a = 0; a < actions; ++a) {
        const Outcome o = step(s, a);
        const double q = o.reward + (o.terminal ? 0.0 : gamma * v[o.next]);
        if (q > best) {
          best = q;
          pi[s] = a;
        }
      }
    }
    return pi;
  }
};

// Trains a DQN on every chain transition for `steps` minibatch updates
// (target synced every 10) and returns its greedy policy.
inline std::vector<int> train_chain_dqn(std::uint64_t seed, int steps = 500) {
  std::mt19937_64 rng(seed);
  QAgentConfig qc;
  qc.state_dim = ChainMdp::states;
  qc.num_actions = ChainMdp::actions;
  qc.gamma = ChainMdp::gamma;
  QAgent agent(qc, rng);
  ReplayBuffer<Experience> buf(64);
  for (int s = 0; s < ChainMdp::states; ++s)
    for (int a = 0; a < ChainMdp::actions; ++a) {
      const auto o = ChainMdp::step(s, a);
      Experience e;
      e.state = ChainMdp::encode(s);
      e.action = a;
      e.reward = o.reward;
      e.next_state = ChainMdp::encode(o.next);
      e.terminal = o.terminal;
      buf.push(e);
    }
  const std::vector<bool> mask(ChainMdp::actions, true);
  for (int i = 0; i < steps; ++i) {
    if (i % 10 == 0) agent.sync_target();
    agent.train_batch(buf, mask, rng, 16);
  }
  std::vector<int> pi;
  for (int s = 0; s < ChainMdp::states; ++s) pi.push_back(agent.greedy_action(ChainMdp::encode(s), mask));
  return pi;
}

}  // namespace d3q::testing
