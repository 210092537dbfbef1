#pragma once

#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "d3q/knowledge_base.hpp"
#include "d3q/schema.hpp"

namespace d3q {

// What the simulated (or human) user wants: constraint values and the slots
// they want answered. source_row is the KB row the goal was drawn from; it is
// hidden from agents and only used to ground values for slots outside C.
struct UserGoal {
  Constraints constraints;
  std::set<Slot> requests;
  std::size_t source_row = 0;

  bool in_constraints(Slot s) const { return constraints.count(s) != 0; }
  bool in_requests(Slot s) const { return requests.count(s) != 0; }

  friend bool operator==(const UserGoal&, const UserGoal&) = default;
};

inline constexpr int kMaxPeople = 9;

// Slots that may join a goal beyond the required five.
inline std::vector<Slot> optional_goal_slots(const Schema& active) {
  std::vector<Slot> out;
  for (Slot s : active.active_slot_list())
    if (informable(s) && !required(s)) out.push_back(s);
  return out;
}

// Draws a satisfiable goal from one KB row. moviename and numberofpeople are
// always constraints; theater, starttime and date land in C or R with equal
// odds; each active optional slot joins with probability 0.5 and then splits
// between C and R uniformly. ticket is always requested.
template <class Rng>
UserGoal sample_user_goal(Rng& rng, const KnowledgeBase& kb, const Schema& active) {
  for (Slot s : kRequiredSlots)
    if (!active.active(s))
      throw SchemaViolation("required slot inactive: " + std::string(name(s)));
  std::uniform_int_distribution<std::size_t> pick_row(0, kb.size() - 1);
  std::uniform_int_distribution<int> pick_people(1, kMaxPeople);
  std::bernoulli_distribution coin(0.5);

  UserGoal goal;
  goal.source_row = pick_row(rng);
  const MovieRow& row = kb.row(goal.source_row);
  goal.constraints[Slot::moviename] = row.at(Slot::moviename);
  goal.constraints[Slot::numberofpeople] = std::to_string(pick_people(rng));
  for (Slot s : {Slot::theater, Slot::starttime, Slot::date}) {
    if (coin(rng))
      goal.constraints[s] = row.at(s);
    else
      goal.requests.insert(s);
  }
  for (Slot s : optional_goal_slots(active)) {
    if (!coin(rng)) continue;
    if (coin(rng) || !requestable(s))
      goal.constraints[s] = row.at(s);
    else
      goal.requests.insert(s);
  }
  goal.requests.insert(Slot::ticket);
  return goal;
}

inline nlohmann::json to_json(const UserGoal& goal) {
  nlohmann::json informs = nlohmann::json::object();
  for (const auto& [s, v] : goal.constraints) informs[std::string(name(s))] = v;
  nlohmann::json requests = nlohmann::json::array();
  for (Slot s : goal.requests) requests.push_back(std::string(name(s)));
  return {{"inform_slots", informs}, {"request_slots", requests}, {"row", goal.source_row}};
}

inline UserGoal goal_from_json(const nlohmann::json& j) {
  try {
    UserGoal goal;
    for (const auto& [k, v] : j.at("inform_slots").items()) {
      auto s = parse_slot(k);
      if (!s) throw FormatError("unknown slot " + k);
      goal.constraints[*s] = v.get<std::string>();
    }
    for (const auto& item : j.at("request_slots")) {
      auto s = parse_slot(item.get<std::string>());
      if (!s) throw FormatError("unknown slot " + item.get<std::string>());
      goal.requests.insert(*s);
    }
    goal.source_row = j.value("row", std::size_t{0});
    return goal;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed goal: ") + e.what());
  }
}

// Goal database: one JSON object per line.
inline void save_goals(const std::string& path, const std::vector<UserGoal>& goals) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& g : goals) out << to_json(g).dump() << '\n';
}

inline std::vector<UserGoal> load_goals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<UserGoal> goals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      goals.push_back(goal_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("malformed goal line: ") + e.what());
    }
  }
  return goals;
}

}  // namespace d3q
