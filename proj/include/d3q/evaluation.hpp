#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "d3q/episode.hpp"
#include "d3q/extension.hpp"

namespace d3q {

// The task: movie table, which parts of the schema are live when, and the
// reward scheme.
struct Environment {
  KnowledgeBase kb;
  ExtensionSchedule schedule;
  RewardSpec reward;

  static std::shared_ptr<const Environment> full_domain(KnowledgeBase kb = KnowledgeBase::synthetic()) {
    return std::make_shared<const Environment>(
        Environment{std::move(kb), ExtensionSchedule::full_domain(), RewardSpec{}});
  }

  static std::shared_ptr<const Environment> domain_extension(
      KnowledgeBase kb = KnowledgeBase::synthetic()) {
    return std::make_shared<const Environment>(
        Environment{std::move(kb), ExtensionSchedule::movie_extension(), RewardSpec{}});
  }

  Schema schema_at(int epoch) const { return active_schema(schedule, epoch); }
};

struct EvalResult {
  int epoch = 0;
  std::string agent;
  std::uint64_t seed = 0;
  int n_dialogues = 0;
  int successes = 0;
  double success_rate = 0.0;
  double avg_reward = 0.0;
  double avg_turns = 0.0;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

inline nlohmann::json to_json(const EvalResult& r) {
  return {{"epoch", r.epoch},           {"agent", r.agent},
          {"seed", r.seed},             {"n_dialogues", r.n_dialogues},
          {"successes", r.successes},   {"success_rate", r.success_rate},
          {"avg_reward", r.avg_reward}, {"avg_turns", r.avg_turns}};
}

// Runs n fresh goals against the simulator with the given (normally greedy)
// policy. Transcripts are returned through `episodes` when requested.
template <class Rng>
EvalResult evaluate(const Policy& policy, const Environment& env, const Schema& schema, int n,
                    Rng& rng, std::vector<Episode>* episodes = nullptr) {
  EvalResult res;
  res.n_dialogues = n;
  double reward_sum = 0.0, turn_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const UserGoal goal = sample_user_goal(rng, env.kb, schema);
    Episode ep = run_user_episode(policy, goal, env.kb, schema, env.reward, rng,
                                  static_cast<std::uint64_t>(i));
    res.successes += ep.success ? 1 : 0;
    reward_sum += ep.episode_return;
    turn_sum += ep.turns;
    if (episodes) episodes->push_back(std::move(ep));
  }
  if (n > 0) {
    res.success_rate = static_cast<double>(res.successes) / n;
    res.avg_reward = reward_sum / n;
    res.avg_turns = turn_sum / n;
  }
  return res;
}

inline Policy rule_policy() {
  return [](const TrackerState& state, const Eigen::VectorXd&) { return rule_agent_step(state); };
}

// Rule policy with a random active action mixed in at the given rate.
template <class Rng>
Policy human_like_policy(std::vector<bool> mask, double random_rate, Rng& rng) {
  std::vector<int> active;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) active.push_back(static_cast<int>(i));
  return [active = std::move(active), random_rate, &rng](const TrackerState& state,
                                                          const Eigen::VectorXd&) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < random_rate) {
      std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
      return active[pick(rng)];
    }
    return rule_agent_step(state);
  };
}

// One line of an evaluation transcript log.
inline nlohmann::json transcript_json(const Episode& ep) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : ep.transcript) turns.push_back(to_json(t));
  return {{"session", ep.record.session}, {"goal", to_json(ep.goal)},
          {"opening", to_json(ep.opening)}, {"turns", turns},
          {"success", ep.success},          {"return", ep.episode_return}};
}

// Success judged from a logged transcript alone: the dialogue ended on a
// booking whose values agree with every goal constraint.
inline bool transcript_success(const nlohmann::json& line) {
  const UserGoal goal = goal_from_json(line.at("goal"));
  const auto& turns = line.at("turns");
  if (turns.empty() || !turns.back().at("terminal").get<bool>()) return false;
  const DialogueAct last = act_from_json(turns.back().at("agent_act"));
  const auto task = last.inform_slots.find(Slot::taskcomplete);
  if (task == last.inform_slots.end() || task->second != kTicketAvailable) return false;
  for (const auto& [slot, value] : goal.constraints) {
    auto it = last.inform_slots.find(slot);
    if (it == last.inform_slots.end() || it->second != value) return false;
  }
  return true;
}

}  // namespace d3q
