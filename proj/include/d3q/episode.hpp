#pragma once

#include <functional>
#include <random>
#include <vector>

#include "d3q/actions.hpp"
#include "d3q/replay.hpp"
#include "d3q/simulator.hpp"
#include "d3q/tracker.hpp"
#include "d3q/world_model.hpp"

namespace d3q {

// Per-turn discriminator input: the state the agent acted in, followed by
// the one-hot action it took.
inline int feature_dim() { return kStateDim + num_agent_actions(); }

inline Eigen::VectorXd turn_feature(const Eigen::VectorXd& state, int action) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(feature_dim());
  f.head(kStateDim) = state;
  f[kStateDim + action] = 1.0;
  return f;
}

// Chooses an action id given the tracker state and its encoding.
using Policy = std::function<int(const TrackerState&, const Eigen::VectorXd&)>;

struct Episode {
  EpisodeRecord record;
  std::vector<TurnRecord> transcript;
  DialogueAct opening;
  UserGoal goal;
  bool success = false;
  int turns = 0;
  double episode_return = 0.0;
};

namespace detail {

inline void record_turn(Episode& ep, const Eigen::VectorXd& s, int a, double r,
                        const TrackerState& next, bool terminal, int user_template,
                        bool timeout = false) {
  Experience e;
  e.state = s;
  e.action = a;
  e.reward = r;
  e.next_state = encode_state(next);
  e.terminal = terminal;
  e.timeout = timeout;
  e.user_template = user_template;
  e.session = ep.record.session;
  ep.record.features.push_back(turn_feature(s, a));
  ep.record.tuples.push_back(std::move(e));
  ep.episode_return += r;
  ++ep.turns;
}

}  // namespace detail

// Full dialogue against the rule-based user simulator.
template <class Rng>
Episode run_user_episode(const Policy& policy, const UserGoal& goal, const KnowledgeBase& kb,
                         const Schema& schema, const RewardSpec& reward, Rng& rng,
                         std::uint64_t session_id = 0) {
  Episode ep;
  ep.goal = goal;
  ep.record.provenance = Provenance::real;
  ep.record.session = session_id;
  SimulatorSession user(goal, schema, reward);
  ep.opening = user.first_user_act(rng);
  TrackerState state = update_tracker(initial_state(kb), ep.opening, kb, schema);
  const auto& actions = agent_actions();
  while (!user.terminal()) {
    const Eigen::VectorXd s = encode_state(state);
    const int a = policy(state, s);
    const DialogueAct agent_act = ground_agent_action(actions[a], state, kb, schema);
    state = update_tracker(std::move(state), agent_act, kb, schema);
    const auto step = user.user_step(agent_act);
    state = update_tracker(std::move(state), step.user_act, kb, schema);
    const auto tmpl = template_of(step.user_act);
    detail::record_turn(ep, s, a, step.reward, state, step.terminal, tmpl.value_or(0),
                        step.timeout);
    ep.transcript.push_back({user.turn(), agent_act, step.user_act, step.reward, step.terminal,
                             state.kb_match_count});
    if (step.terminal) ep.success = step.success;
  }
  ep.record.episode_return = ep.episode_return;
  ep.record.success = ep.success;
  return ep;
}

// Fills a predicted user template with values from the planning goal.
inline DialogueAct ground_user_template(const ActTemplate& t, const UserGoal& goal,
                                        const KnowledgeBase& kb) {
  DialogueAct act;
  act.speaker = Speaker::user;
  act.intent = t.intent;
  if (!t.slot) return act;
  if (t.intent == Intent::request) {
    act.request_slots.insert(*t.slot);
  } else {
    auto it = goal.constraints.find(*t.slot);
    act.inform_slots[*t.slot] =
        it != goal.constraints.end() ? it->second : kb.row(goal.source_row).at(*t.slot);
  }
  return act;
}

// Templates the planning goal can ground: informs of its constraints and
// requests of its open request slots.
inline std::vector<bool> goal_template_mask(const UserGoal& goal, const Schema& schema) {
  std::vector<bool> mask = user_template_mask(schema);
  for (const auto& t : user_templates()) {
    if (!t.slot) continue;
    if (t.intent == Intent::inform && !goal.in_constraints(*t.slot)) mask[t.id] = false;
    if (t.intent == Intent::request && (!goal.in_requests(*t.slot) || *t.slot == Slot::ticket))
      mask[t.id] = false;
  }
  return mask;
}

// Planning rollout: the agent talks to the world model instead of the user.
// Past the turn limit the session is cut as a failure.
template <class Rng>
Episode run_model_episode(const Policy& policy, const WorldModel& world, const UserGoal& goal,
                          const KnowledgeBase& kb, const Schema& schema, const RewardSpec& reward,
                          Rng& rng, std::uint64_t session_id = 0) {
  Episode ep;
  ep.goal = goal;
  ep.record.provenance = Provenance::simulated;
  ep.record.session = session_id;
  SimulatorSession opener(goal, schema, reward);
  ep.opening = opener.first_user_act(rng);
  TrackerState state = update_tracker(initial_state(kb), ep.opening, kb, schema);
  const auto& actions = agent_actions();
  const auto& templates = user_templates();
  const auto template_mask = goal_template_mask(goal, schema);
  for (int turn = 1;; ++turn) {
    const Eigen::VectorXd s = encode_state(state);
    const int a = policy(state, s);
    const DialogueAct agent_act = ground_agent_action(actions[a], state, kb, schema);
    state = update_tracker(std::move(state), agent_act, kb, schema);
    SimulatedStep step = world.simulate_step(s, a, template_mask, rng);
    bool timeout = false;
    if (!step.terminal && turn >= reward.max_turns) {
      step.terminal = true;
      step.reward = reward.per_turn + reward.failure;
      timeout = true;
    }
    const DialogueAct user_act = ground_user_template(templates[step.user_template], goal, kb);
    state = update_tracker(std::move(state), user_act, kb, schema);
    detail::record_turn(ep, s, a, step.reward, state, step.terminal, step.user_template, timeout);
    ep.transcript.push_back({turn, agent_act, user_act, step.reward, step.terminal,
                             state.kb_match_count});
    if (step.terminal) {
      ep.success = step.reward > 0.0;
      break;
    }
  }
  ep.record.episode_return = ep.episode_return;
  ep.record.success = ep.success;
  return ep;
}

}  // namespace d3q
