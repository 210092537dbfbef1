#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "d3q/discriminator.hpp"
#include "d3q/dqn.hpp"
#include "d3q/episode.hpp"
#include "d3q/evaluation.hpp"
#include "d3q/replay.hpp"
#include "d3q/world_model.hpp"

namespace d3q {

enum class AgentKind { dqn, dqn_k, ddq, d3q };
enum class Domain { full, extension };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::dqn: return "dqn";
    case AgentKind::dqn_k: return "dqnk";
    case AgentKind::ddq: return "ddq";
    case AgentKind::d3q: return "d3q";
  }
  return "?";
}

inline std::optional<AgentKind> parse_agent_kind(std::string_view s) {
  if (s == "dqn") return AgentKind::dqn;
  if (s == "dqnk") return AgentKind::dqn_k;
  if (s == "ddq") return AgentKind::ddq;
  if (s == "d3q") return AgentKind::d3q;
  return std::nullopt;
}

struct TrainConfig {
  AgentKind agent = AgentKind::d3q;
  int k = 5;
  int epochs = 300;
  std::uint64_t seed = 1;
  Domain domain = Domain::full;
  bool rand_init_world = false;
  bool fixed_world = false;
  bool fixed_discriminator = false;

  int collect_dialogues = 10;    // real dialogues per epoch
  int batch_size = 16;
  int rbs_dialogues = 50;        // rule-agent dialogues pre-filled into B^u
  std::size_t real_capacity = 2000;
  std::size_t planning_capacity = 2000;  // per planning step: B^h tuples, B^s sessions
  int attempt_cap = 50;                  // per planning step
  int world_pretrain_passes = 10;        // over the pre-training corpus
  // Stand-in for human conversational data: rule-policy dialogues with a
  // random action mixed in at world_corpus_random.
  int world_corpus_dialogues = 400;
  double world_reward_scale = 1.0;
  double world_corpus_random = 0.8;
  int disc_batch = 16;
  int disc_steps = 1;                    // discriminator updates per epoch
  double epsilon = 0.05;
  double gamma = 0.9;
  nn::RmsPropConfig optimizer;

  int eval_every = 5;
  int eval_dialogues = 50;
  int checkpoint_every = 50;
  std::string checkpoint_dir;  // empty: no checkpoints

  bool plans() const { return agent == AgentKind::ddq || agent == AgentKind::d3q; }
  bool gated() const { return agent == AgentKind::d3q; }
  int planning_steps() const { return k - 1; }
  int planning_quota() const { return plans() ? collect_dialogues * (k - 1) : 0; }
  int real_per_epoch() const {
    return agent == AgentKind::dqn_k ? collect_dialogues * k : collect_dialogues;
  }
  std::size_t real_buffer_capacity() const {
    return agent == AgentKind::dqn_k ? real_capacity * static_cast<std::size_t>(k) : real_capacity;
  }

  // Comma-free so it can sit in a CSV cell.
  std::string label() const {
    std::string base;
    switch (agent) {
      case AgentKind::dqn: return "DQN";
      case AgentKind::dqn_k: return "DQN(" + std::to_string(k) + ")";
      case AgentKind::ddq: base = "DDQ(" + std::to_string(k) + ")"; break;
      case AgentKind::d3q: base = "D3Q(" + std::to_string(k) + ")"; break;
    }
    if (rand_init_world) base += "+rand-init-G";
    if (fixed_world) base += "+fixed-G";
    if (fixed_discriminator) base += "+fixed-D";
    return base;
  }

  void validate() const {
    if ((plans() || agent == AgentKind::dqn_k) && k < 2)
      throw std::invalid_argument("K must be at least 2 for " + label());
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (rand_init_world && fixed_world)
      throw std::invalid_argument("rand-init and fixed world model are exclusive");
    if ((rand_init_world || fixed_world) && !plans())
      throw std::invalid_argument("world-model flags need ddq or d3q");
    if (fixed_discriminator && !gated())
      throw std::invalid_argument("fixed discriminator needs d3q");
    if (collect_dialogues < 1 || batch_size < 1 || disc_batch < 1)
      throw std::invalid_argument("batch sizes must be positive");
  }
};

struct EpochStats {
  int epoch = 0;
  int real_dialogues = 0;
  int real_successes = 0;
  int simulated_sessions = 0;  // appended to B^s
  int accepted_sessions = 0;   // appended to B^h
  int planning_attempts = 0;
  int fallback_sessions = 0;
  bool attempt_cap_warning = false;
  double mean_score = 0.0;     // discriminator score over this epoch's attempts
  double score_sd = 0.0;
  double real_score = 0.0;     // mean score of this epoch's real sessions
  double dqn_loss = 0.0;
  double world_loss = 0.0;
  double disc_loss = 0.0;
  std::size_t real_tuples = 0;
  std::size_t simulated_buffer_sessions = 0;
  std::size_t high_quality_tuples = 0;
  std::size_t high_quality_sessions = 0;
};

// One entry per session written to B^h.
struct AuditEntry {
  std::uint64_t session = 0;
  int epoch = 0;
  double score = 0.0;
  bool gated = false;     // a discriminator decided
  bool accepted = false;  // score fell inside the acceptance band
  bool fallback = false;  // inserted by the attempt-cap fallback
};

// Orchestrates one training run: replay-buffer spiking, then per epoch
// direct RL, world-model learning, discriminator learning and (controlled)
// planning.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<const Environment> env)
      : cfg_(std::move(cfg)),
        env_(std::move(env)),
        real_(cfg_.real_buffer_capacity()),
        real_sessions_(cfg_.real_capacity),
        simulated_(cfg_.planning_capacity * static_cast<std::size_t>(std::max(cfg_.k - 1, 1))),
        high_quality_(cfg_.planning_capacity * static_cast<std::size_t>(std::max(cfg_.k - 1, 1))) {
    cfg_.validate();
    std::seed_seq seq{cfg_.seed, std::uint64_t{0xd3}};
    std::vector<std::uint64_t> seeds(6);
    seq.generate(seeds.begin(), seeds.end());
    env_rng_.seed(seeds[0]);
    explore_rng_.seed(seeds[1]);
    train_rng_.seed(seeds[2]);
    plan_rng_.seed(seeds[3]);
    std::mt19937_64 init_rng(seeds[4]);
    corpus_rng_.seed(seeds[5]);

    QAgentConfig qc;
    qc.state_dim = kStateDim;
    qc.num_actions = num_agent_actions();
    qc.gamma = cfg_.gamma;
    qc.epsilon = cfg_.epsilon;
    qc.optimizer = cfg_.optimizer;
    agent_ = QAgent(qc, init_rng);

    if (cfg_.plans()) {
      WorldModelConfig wc;
      wc.num_actions = num_agent_actions();
      wc.num_templates = num_user_templates();
      wc.reward_scale = cfg_.world_reward_scale;
      wc.timeout_penalty = -env_->reward.failure;
      wc.optimizer = cfg_.optimizer;
      world_ = WorldModel(wc, init_rng);
    }
    if (cfg_.gated()) {
      DiscriminatorConfig dc;
      dc.feature_dim = feature_dim();
      dc.optimizer = cfg_.optimizer;
      disc_ = Discriminator(dc, init_rng);
    }
  }

  const TrainConfig& config() const { return cfg_; }
  const Environment& environment() const { return *env_; }
  QAgent& agent() { return agent_; }
  const QAgent& agent() const { return agent_; }
  WorldModel& world() { return world_; }
  Discriminator& discriminator() { return disc_; }
  const ReplayBuffer<Experience>& real_buffer() const { return real_; }
  const SessionBuffer& simulated_buffer() const { return simulated_; }
  const ReplayBuffer<Experience>& high_quality_buffer() const { return high_quality_; }
  const std::unordered_map<std::uint64_t, AuditEntry>& audit() const { return audit_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool prefilled() const { return prefilled_; }

  // Override the discriminator's scoring; used to pin its output in tests.
  void set_score_override(std::function<double(const EpisodeRecord&)> f) {
    score_override_ = std::move(f);
  }

  // Pre-fills B^u with rule-agent dialogues, then pre-trains the world model
  // on them unless the run asks for a randomly initialised one.
  void rbs_prefill() {
    if (prefilled_) throw std::logic_error("replay buffer already spiked");
    prefilled_ = true;
    const Schema schema = env_->schema_at(0);
    const Policy rule = rule_policy();
    for (int i = 0; i < cfg_.rbs_dialogues; ++i) {
      const UserGoal goal = sample_user_goal(env_rng_, env_->kb, schema);
      Episode ep = run_user_episode(rule, goal, env_->kb, schema, env_->reward, env_rng_,
                                    next_session_++);
      for (auto& e : ep.record.tuples) real_.push(std::move(e));
    }
    if (cfg_.plans() && !cfg_.rand_init_world) pretrain_world(schema);
  }

  EpochStats run_epoch(int epoch) {
    if (!prefilled_) rbs_prefill();
    EpochStats st;
    st.epoch = epoch;
    const Schema schema = env_->schema_at(epoch);
    const auto mask = agent_action_mask(schema);

    // (a) fixed target refreshed at the start of every epoch
    agent_.sync_target();

    // (b) real experience
    const Policy explore = epsilon_policy(mask, explore_rng_);
    for (int i = 0; i < cfg_.real_per_epoch(); ++i) {
      const UserGoal goal = sample_user_goal(env_rng_, env_->kb, schema);
      Episode ep = run_user_episode(explore, goal, env_->kb, schema, env_->reward, env_rng_,
                                    next_session_++);
      ++st.real_dialogues;
      st.real_successes += ep.success ? 1 : 0;
      for (const auto& e : ep.record.tuples) real_.push(e);
      ep.record.tuples.clear();
      real_sessions_.push(std::move(ep.record));
    }

    // (c) direct reinforcement learning
    st.dqn_loss = train_agent(real_, mask);

    // (d) world-model learning
    if (cfg_.plans() && !cfg_.fixed_world) {
      const int steps = steps_for(real_.size());
      double sum = 0.0;
      for (int i = 0; i < steps; ++i)
        sum += world_.train_batch(real_, train_rng_, cfg_.batch_size).total();
      st.world_loss = steps ? sum / steps : 0.0;
    }

    // (e) discriminator learning on recent real vs last epoch's simulated
    if (cfg_.gated() && !cfg_.fixed_discriminator && !real_sessions_.empty() &&
        last_simulated_ > 0) {
      double sum = 0.0;
      for (int i = 0; i < cfg_.disc_steps; ++i) {
        const auto real = sample_sessions(real_sessions_, static_cast<std::size_t>(cfg_.real_per_epoch()));
        const auto sim = sample_sessions(simulated_, last_simulated_);
        sum += disc_.train_on(real, sim);
      }
      st.disc_loss = sum / cfg_.disc_steps;
    }

    // (f) controlled planning, (g) planning updates from B^h
    if (cfg_.plans()) {
      collect_planning(epoch, schema, mask, st);
      st.dqn_loss += train_agent(high_quality_, mask);
    }

    st.real_tuples = real_.size();
    st.simulated_buffer_sessions = simulated_.sessions();
    st.high_quality_tuples = high_quality_.size();
    st.high_quality_sessions = high_quality_session_count();
    return st;
  }

  // Rolls out agent-vs-world-model sessions until the quota of 10*(K-1) has
  // entered B^h or the attempt cap is hit. Every rollout goes to B^s. On the
  // cap the quota is topped up with the attempts scoring closest to 0.5.
  int collect_planning(int epoch, const Schema& schema, const std::vector<bool>& mask,
                       EpochStats& st) {
    const int quota = cfg_.planning_quota();
    const int cap = cfg_.attempt_cap * cfg_.planning_steps();
    const Policy explore = epsilon_policy(mask, plan_rng_);
    struct Attempt {
      EpisodeRecord record;
      double score;
    };
    std::vector<Attempt> rejected;
    double score_sum = 0.0, score_sq = 0.0;
    int accepted = 0, attempts = 0;
    while (accepted < quota && attempts < cap) {
      const UserGoal goal = sample_user_goal(plan_rng_, env_->kb, schema);
      Episode ep = run_model_episode(explore, world_, goal, env_->kb, schema, env_->reward,
                                     plan_rng_, next_session_++);
      ++attempts;
      EpisodeRecord features_only = ep.record;
      features_only.tuples.clear();
      simulated_.push(std::move(features_only));
      ++st.simulated_sessions;

      if (!cfg_.gated()) {
        insert_high_quality(ep.record, epoch, 0.0, false, false);
        ++accepted;
        continue;
      }
      const double s = score(ep.record);
      score_sum += s;
      score_sq += s * s;
      if (disc_.accept(s)) {
        insert_high_quality(ep.record, epoch, s, true, false);
        ++accepted;
      } else {
        rejected.push_back({std::move(ep.record), s});
      }
    }
    if (accepted < quota) {
      st.attempt_cap_warning = true;
      warnings_.push_back("epoch " + std::to_string(epoch) + ": attempt cap " +
                          std::to_string(cap) + " reached with " + std::to_string(accepted) +
                          "/" + std::to_string(quota) + " accepted");
      std::stable_sort(rejected.begin(), rejected.end(), [](const Attempt& a, const Attempt& b) {
        return std::abs(a.score - 0.5) < std::abs(b.score - 0.5);
      });
      for (auto& r : rejected) {
        if (accepted >= quota) break;
        insert_high_quality(r.record, epoch, r.score, false, true);
        ++accepted;
        ++st.fallback_sessions;
      }
    }
    last_simulated_ = static_cast<std::size_t>(attempts);
    st.planning_attempts = attempts;
    st.accepted_sessions = accepted;
    if (attempts && cfg_.gated()) {
      st.mean_score = score_sum / attempts;
      st.score_sd = std::sqrt(std::max(0.0, score_sq / attempts - st.mean_score * st.mean_score));
      double real_sum = 0.0;
      const auto recent = real_sessions_.recent(static_cast<std::size_t>(cfg_.real_per_epoch()));
      for (const auto* ep : recent) real_sum += score(*ep);
      st.real_score = recent.empty() ? 0.0 : real_sum / static_cast<double>(recent.size());
    }
    return accepted;
  }

  // Greedy evaluation on n fresh goals. The goal stream depends only on
  // (seed, epoch) so it does not disturb training randomness.
  EvalResult evaluate_at(int epoch, int n, std::vector<Episode>* episodes = nullptr) const {
    std::seed_seq seq{cfg_.seed, static_cast<std::uint64_t>(epoch), std::uint64_t{0xe7a1}};
    std::mt19937_64 rng(seq);
    const Schema schema = env_->schema_at(epoch);
    const auto mask = agent_action_mask(schema);
    EvalResult r = evaluate(greedy_policy(mask), *env_, schema, n, rng, episodes);
    r.epoch = epoch;
    r.agent = cfg_.label();
    r.seed = cfg_.seed;
    return r;
  }

  Policy greedy_policy(const std::vector<bool>& mask) const {
    return [this, mask](const TrackerState&, const Eigen::VectorXd& s) {
      return agent_.greedy_action(s, mask);
    };
  }

  // Full run: returns the learning curve sampled every eval_every epochs.
  std::vector<EvalResult> run(const std::function<void(const EpochStats&)>& on_epoch = {},
                              const std::function<void(const EvalResult&)>& on_eval = {}) {
    if (!prefilled_) rbs_prefill();
    std::vector<EvalResult> curve;
    for (int e = 0; e < cfg_.epochs; ++e) {
      const EpochStats st = run_epoch(e);
      if (on_epoch) on_epoch(st);
      const int done = e + 1;
      if (cfg_.eval_every > 0 && done % cfg_.eval_every == 0) {
        curve.push_back(evaluate_at(done, cfg_.eval_dialogues));
        if (on_eval) on_eval(curve.back());
      }
      if (!cfg_.checkpoint_dir.empty() && cfg_.checkpoint_every > 0 &&
          done % cfg_.checkpoint_every == 0)
        write_checkpoints(done);
    }
    return curve;
  }

  void write_checkpoints(int epoch) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg_.checkpoint_dir);
    const std::string stem = cfg_.checkpoint_dir + "/" + to_string(cfg_.agent) + "_k" +
                             std::to_string(cfg_.k) + "_s" + std::to_string(cfg_.seed) + "_e" +
                             std::to_string(epoch);
    agent_.save(stem + ".q.ckpt");
    if (cfg_.plans()) world_.save(stem + ".world.ckpt");
    if (cfg_.gated()) disc_.save(stem + ".disc.ckpt");
  }

  // Distinct sessions with at least one tuple still in B^h.
  std::size_t high_quality_session_count() const {
    std::size_t n = 0;
    std::uint64_t last = 0;
    bool any = false;
    for (const auto& e : high_quality_) {
      if (!any || e.session != last) ++n;
      last = e.session;
      any = true;
    }
    return n;
  }

  // Every session with tuples in B^h passed the band test when it went in.
  bool gate_invariant_holds() const {
    if (!cfg_.gated()) return true;
    for (const auto& e : high_quality_) {
      auto it = audit_.find(e.session);
      if (it == audit_.end() || !it->second.accepted || !disc_.accept(it->second.score))
        return false;
    }
    return true;
  }

 private:
  void pretrain_world(const Schema& schema) {
    ReplayBuffer<Experience> corpus(std::numeric_limits<std::size_t>::max());
    for (const auto& e : real_) corpus.push(e);
    const Policy human = human_like_policy(agent_action_mask(schema), cfg_.world_corpus_random,
                                           corpus_rng_);
    for (int i = 0; i < cfg_.world_corpus_dialogues; ++i) {
      const UserGoal goal = sample_user_goal(corpus_rng_, env_->kb, schema);
      Episode ep = run_user_episode(human, goal, env_->kb, schema, env_->reward, corpus_rng_);
      for (auto& e : ep.record.tuples) corpus.push(std::move(e));
    }
    const int steps = cfg_.world_pretrain_passes * steps_for(corpus.size());
    for (int i = 0; i < steps; ++i) world_.train_batch(corpus, corpus_rng_, cfg_.batch_size);
  }

  static int steps_for(std::size_t n) {
    return static_cast<int>((n + 15) / 16);
  }

  template <class Rng>
  Policy epsilon_policy(const std::vector<bool>& mask, Rng& rng) {
    return [this, mask, &rng](const TrackerState&, const Eigen::VectorXd& s) {
      return agent_.select_action(s, mask, rng);
    };
  }

  double train_agent(const ReplayBuffer<Experience>& buffer, const std::vector<bool>& mask) {
    if (buffer.empty()) return 0.0;
    const int steps = steps_for(buffer.size());
    double sum = 0.0;
    for (int i = 0; i < steps; ++i)
      sum += agent_.train_batch(buffer, mask, train_rng_, static_cast<std::size_t>(cfg_.batch_size));
    return sum / steps;
  }

  double score(const EpisodeRecord& ep) const {
    return score_override_ ? score_override_(ep) : disc_.score(ep);
  }

  // m sessions drawn with replacement from the newest `window` entries.
  std::vector<const EpisodeRecord*> sample_sessions(const SessionBuffer& buf, std::size_t window) {
    const auto pool = buf.recent(window);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<const EpisodeRecord*> out;
    for (int i = 0; i < cfg_.disc_batch; ++i) out.push_back(pool[pick(train_rng_)]);
    return out;
  }

  void insert_high_quality(const EpisodeRecord& ep, int epoch, double s, bool accepted,
                           bool fallback) {
    AuditEntry a{ep.session, epoch, s, cfg_.gated(), accepted, fallback};
    if (cfg_.gated() && accepted && !disc_.accept(s))
      throw std::logic_error("session outside the acceptance band marked accepted");
    audit_[ep.session] = a;
    for (const auto& e : ep.tuples) high_quality_.push(e);
  }

  TrainConfig cfg_;
  std::shared_ptr<const Environment> env_;
  QAgent agent_;
  WorldModel world_;
  Discriminator disc_;
  ReplayBuffer<Experience> real_;
  SessionBuffer real_sessions_;
  SessionBuffer simulated_;
  ReplayBuffer<Experience> high_quality_;
  std::unordered_map<std::uint64_t, AuditEntry> audit_;
  std::vector<std::string> warnings_;
  std::function<double(const EpisodeRecord&)> score_override_;
  std::mt19937_64 env_rng_, explore_rng_, train_rng_, plan_rng_, corpus_rng_;
  std::uint64_t next_session_ = 1;
  std::size_t last_simulated_ = 0;
  bool prefilled_ = false;
};

}  // namespace d3q
