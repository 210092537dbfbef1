#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "d3q/actions.hpp"
#include "d3q/knowledge_base.hpp"
#include "d3q/schema.hpp"

namespace d3q {

inline constexpr int kMaxTurns = 40;
inline constexpr int kKbBuckets = 6;
inline constexpr int kRepeatBuckets = 4;

// Everything the agent knows about the conversation so far.
struct TrackerState {
  Constraints user_constraints;  // values the user has stated
  Constraints agent_informed;    // values the agent has given out
  std::set<Slot> user_requested;
  std::set<Slot> agent_requested;
  std::optional<DialogueAct> last_user_act;
  std::optional<DialogueAct> last_agent_act;
  std::set<std::string> agent_said;  // distinct agent acts so far
  int agent_repeats = 0;             // agent acts that repeated an earlier one
  int turn = 0;                      // agent acts so far
  std::size_t kb_match_count = 0;

  friend bool operator==(const TrackerState&, const TrackerState&) = default;
};

inline TrackerState initial_state(const KnowledgeBase& kb) {
  TrackerState s;
  s.kb_match_count = kb.size();
  return s;
}

// Folds one act into the state. Cumulative sets only grow; the turn counter
// advances on agent acts.
inline TrackerState update_tracker(TrackerState state, const DialogueAct& act,
                                   const KnowledgeBase& kb, const Schema& schema) {
  act.validate(schema);
  if (act.speaker == Speaker::user) {
    for (const auto& [slot, value] : act.inform_slots) state.user_constraints[slot] = value;
    state.user_requested.insert(act.request_slots.begin(), act.request_slots.end());
    state.last_user_act = act;
  } else {
    for (const auto& [slot, value] : act.inform_slots) state.agent_informed[slot] = value;
    state.agent_requested.insert(act.request_slots.begin(), act.request_slots.end());
    if (!state.agent_said.insert(to_string(act)).second) ++state.agent_repeats;
    state.last_agent_act = act;
    ++state.turn;
  }
  state.kb_match_count = kb.count(state.user_constraints);
  return state;
}

// Feature layout, always sized for the full 18-slot vocabulary:
//   last user intent (one-hot) | last user slots (bag)
//   last agent intent (one-hot) | last agent slots (bag)
//   user-informed slots | agent-informed slots | requested slots (either side)
//   turn / 40 | agent repeats (one-hot over {0,1,2,>=3})
//   KB match bucket one-hot over {0,1,2,3,4,>=5}
struct StateLayout {
  static constexpr int user_intent = 0;
  static constexpr int user_slots = user_intent + kIntentCount;
  static constexpr int agent_intent = user_slots + kSlotCount;
  static constexpr int agent_slots = agent_intent + kIntentCount;
  static constexpr int user_informed = agent_slots + kSlotCount;
  static constexpr int agent_informed = user_informed + kSlotCount;
  static constexpr int requested = agent_informed + kSlotCount;
  static constexpr int turn = requested + kSlotCount;
  static constexpr int repeats = turn + 1;
  static constexpr int kb_bucket = repeats + kRepeatBuckets;
  static constexpr int size = kb_bucket + kKbBuckets;
};
static_assert(StateLayout::size == 2 * kIntentCount + 5 * kSlotCount + 1 + kRepeatBuckets + kKbBuckets);

inline constexpr int kStateDim = StateLayout::size;

using StateVector = Eigen::VectorXd;

inline StateVector encode_state(const TrackerState& state) {
  StateVector v = StateVector::Zero(kStateDim);
  auto mark_act = [&v](const std::optional<DialogueAct>& act, int intent_off, int slot_off) {
    if (!act) return;
    v[intent_off + index(act->intent)] = 1.0;
    for (const auto& [slot, value] : act->inform_slots) v[slot_off + index(slot)] = 1.0;
    for (Slot slot : act->request_slots) v[slot_off + index(slot)] = 1.0;
  };
  mark_act(state.last_user_act, StateLayout::user_intent, StateLayout::user_slots);
  mark_act(state.last_agent_act, StateLayout::agent_intent, StateLayout::agent_slots);
  for (const auto& [slot, value] : state.user_constraints)
    v[StateLayout::user_informed + index(slot)] = 1.0;
  for (const auto& [slot, value] : state.agent_informed)
    v[StateLayout::agent_informed + index(slot)] = 1.0;
  for (Slot s : state.user_requested) v[StateLayout::requested + index(s)] = 1.0;
  for (Slot s : state.agent_requested) v[StateLayout::requested + index(s)] = 1.0;
  v[StateLayout::turn] = std::min(state.turn, kMaxTurns) / static_cast<double>(kMaxTurns);
  v[StateLayout::repeats + std::min(state.agent_repeats, kRepeatBuckets - 1)] = 1.0;
  const auto bucket = std::min<std::size_t>(state.kb_match_count, kKbBuckets - 1);
  v[StateLayout::kb_bucket + static_cast<int>(bucket)] = 1.0;
  return v;
}

inline constexpr const char* kNoMatch = "no match available";
inline constexpr const char* kTicketAvailable = "ticket available";
inline constexpr const char* kNoTicket = "no ticket available";

// Turns an action template into a concrete agent act. Values come from the
// first KB row consistent with what the user has said; a booking also needs
// the party size.
inline DialogueAct ground_agent_action(const ActTemplate& action, const TrackerState& state,
                                       const KnowledgeBase& kb, const Schema& schema) {
  DialogueAct act;
  act.speaker = Speaker::agent;
  act.intent = action.intent;
  if (action.intent == Intent::request && action.slot) {
    act.request_slots.insert(*action.slot);
    return act;
  }
  if (action.intent != Intent::inform || !action.slot) return act;

  const auto row = kb.first_match(state.user_constraints);
  if (*action.slot != Slot::taskcomplete) {
    act.inform_slots[*action.slot] = row ? kb.row(*row).at(*action.slot) : kNoMatch;
    return act;
  }
  const auto people = state.user_constraints.find(Slot::numberofpeople);
  if (!row || people == state.user_constraints.end()) {
    act.inform_slots[Slot::taskcomplete] = kNoTicket;
    return act;
  }
  act.inform_slots[Slot::taskcomplete] = kTicketAvailable;
  for (Slot s : kb_columns())
    if (schema.active(s)) act.inform_slots[s] = kb.row(*row).at(s);
  act.inform_slots[Slot::numberofpeople] = people->second;
  return act;
}

}  // namespace d3q
