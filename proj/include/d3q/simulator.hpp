#pragma once

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "d3q/actions.hpp"
#include "d3q/tracker.hpp"
#include "d3q/user_goal.hpp"

namespace d3q {

struct RewardSpec {
  int max_turns = kMaxTurns;
  double success = 2.0 * kMaxTurns;
  double failure = -1.0 * kMaxTurns;
  double per_turn = -1.0;
};

enum class SessionStatus { ongoing, success, failure };

// Repeated agent acts the user puts up with before hanging up.
inline constexpr int kUserPatience = 2;

// Agenda-based rule user. Deterministic given its goal and the opening act;
// only the opening act consumes randomness.
class SimulatorSession {
 public:
  SimulatorSession(UserGoal goal, Schema schema, RewardSpec reward = {})
      : goal_(std::move(goal)), schema_(std::move(schema)), reward_(reward) {
    // Agenda order: required constraints first, then the rest in slot order.
    for (Slot s : kRequiredSlots)
      if (goal_.in_constraints(s)) pending_informs_.push_back(s);
    for (const auto& [slot, value] : goal_.constraints)
      if (!required(slot)) pending_informs_.push_back(slot);
    for (Slot s : goal_.requests)
      if (s != Slot::ticket) pending_requests_.push_back(s);
  }

  const UserGoal& goal() const { return goal_; }
  const Schema& schema() const { return schema_; }
  SessionStatus status() const { return status_; }
  int turn() const { return turn_; }
  bool terminal() const { return status_ != SessionStatus::ongoing; }

  // Opening act: a request for one non-default R slot plus 1-3 constraints
  // drawn from C, or an inform of 1-3 constraints when R holds only ticket.
  template <class Rng>
  DialogueAct first_user_act(Rng& rng) {
    if (opened_) throw SessionClosed("opening act already issued");
    opened_ = true;
    DialogueAct act;
    act.speaker = Speaker::user;

    std::vector<Slot> cslots;
    for (const auto& [slot, value] : goal_.constraints) cslots.push_back(slot);
    std::shuffle(cslots.begin(), cslots.end(), rng);
    const int max_n = std::min<int>(3, static_cast<int>(cslots.size()));
    const int n = std::uniform_int_distribution<int>(1, max_n)(rng);
    for (int i = 0; i < n; ++i) {
      act.inform_slots[cslots[i]] = goal_.constraints.at(cslots[i]);
      mark_informed(cslots[i]);
    }
    if (!pending_requests_.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pending_requests_.size() - 1);
      act.intent = Intent::request;
      act.request_slots.insert(pending_requests_[pick(rng)]);
    } else {
      act.intent = Intent::inform;
    }
    return act;
  }

  struct Step {
    DialogueAct user_act;
    double reward = 0.0;
    bool terminal = false;
    bool success = false;
    bool timeout = false;  // ended by the turn limit, not by the user
  };

  Step user_step(const DialogueAct& agent_act) {
    if (terminal()) throw SessionClosed("simulator session already finished");
    ++turn_;
    Step step;
    step.reward = reward_.per_turn;
    step.user_act.speaker = Speaker::user;

    const auto task = agent_act.inform_slots.find(Slot::taskcomplete);
    if (agent_act.intent == Intent::inform && task != agent_act.inform_slots.end()) {
      step.success = booking_satisfies_goal(agent_act);
      finish(step, step.success);
      return step;
    }
    if (agent_act.intent == Intent::closing) {
      finish(step, false);
      return step;
    }
    if (!said_.insert(to_string(agent_act)).second && ++repeats_ > kUserPatience) {
      finish(step, false);
      return step;
    }

    step.user_act = respond(agent_act);
    if (turn_ >= reward_.max_turns) {
      DialogueAct said = step.user_act;
      finish(step, false);
      step.user_act = std::move(said);
      step.timeout = true;
    }
    return step;
  }

  // Booked row must agree with every constraint, party size included.
  bool booking_satisfies_goal(const DialogueAct& agent_act) const {
    const auto task = agent_act.inform_slots.find(Slot::taskcomplete);
    if (task == agent_act.inform_slots.end() || task->second != kTicketAvailable) return false;
    for (const auto& [slot, value] : goal_.constraints) {
      auto it = agent_act.inform_slots.find(slot);
      if (it == agent_act.inform_slots.end() || it->second != value) return false;
    }
    return true;
  }

  const std::vector<Slot>& pending_informs() const { return pending_informs_; }
  const std::vector<Slot>& pending_requests() const { return pending_requests_; }

 private:
  void finish(Step& step, bool success) {
    status_ = success ? SessionStatus::success : SessionStatus::failure;
    step.terminal = true;
    step.success = success;
    step.reward += success ? reward_.success : reward_.failure;
    step.user_act = DialogueAct{Speaker::user, success ? Intent::thanks : Intent::closing, {}, {}};
  }

  void mark_informed(Slot s) {
    pending_informs_.erase(std::remove(pending_informs_.begin(), pending_informs_.end(), s),
                           pending_informs_.end());
  }

  DialogueAct respond(const DialogueAct& agent_act) {
    DialogueAct out;
    out.speaker = Speaker::user;
    if (agent_act.intent == Intent::request && agent_act.request_slots.size() == 1) {
      const Slot s = *agent_act.request_slots.begin();
      if (goal_.in_constraints(s)) {
        out.intent = Intent::inform;
        out.inform_slots[s] = goal_.constraints.at(s);
        mark_informed(s);
      } else if (goal_.in_requests(s) && s != Slot::ticket) {
        out.intent = Intent::request;
        out.request_slots.insert(s);
      } else {
        out.intent = Intent::not_sure;
      }
      return out;
    }
    if (agent_act.intent == Intent::inform) {
      for (const auto& [slot, value] : agent_act.inform_slots)
        pending_requests_.erase(
            std::remove(pending_requests_.begin(), pending_requests_.end(), slot),
            pending_requests_.end());
    }
    return continue_agenda();
  }

  // Next agenda item: open requests first, then unstated constraints.
  DialogueAct continue_agenda() {
    DialogueAct out;
    out.speaker = Speaker::user;
    if (!pending_requests_.empty()) {
      out.intent = Intent::request;
      out.request_slots.insert(pending_requests_.front());
    } else if (!pending_informs_.empty()) {
      const Slot s = pending_informs_.front();
      out.intent = Intent::inform;
      out.inform_slots[s] = goal_.constraints.at(s);
      mark_informed(s);
    } else {
      out.intent = Intent::thanks;
    }
    return out;
  }

  UserGoal goal_;
  Schema schema_;
  RewardSpec reward_;
  std::vector<Slot> pending_informs_;
  std::vector<Slot> pending_requests_;
  std::set<std::string> said_;  // agent acts heard so far
  int repeats_ = 0;
  int turn_ = 0;
  bool opened_ = false;
  SessionStatus status_ = SessionStatus::ongoing;
};

// Hand-written policy used to spike the replay buffer: ask for each required
// slot the user has not stated (once), then book.
inline int rule_agent_step(const TrackerState& state) {
  for (Slot s : kRequiredSlots) {
    if (state.user_constraints.count(s) || state.agent_requested.count(s)) continue;
    return agent_action_id(Intent::request, s);
  }
  return agent_action_id(Intent::inform, Slot::taskcomplete);
}

// One exchange in a transcript.
struct TurnRecord {
  int turn = 0;
  DialogueAct agent_act;
  DialogueAct user_act;
  double reward = 0.0;
  bool terminal = false;
  std::size_t kb_matches = 0;
};

inline nlohmann::json to_json(const TurnRecord& r) {
  return {{"turn", r.turn},         {"agent_act", to_json(r.agent_act)},
          {"user_act", to_json(r.user_act)}, {"reward", r.reward},
          {"terminal", r.terminal}, {"kb_matches", r.kb_matches}};
}

}  // namespace d3q
