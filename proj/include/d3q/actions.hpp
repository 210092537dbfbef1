#pragma once

#include <optional>
#include <string>
#include <vector>

#include "d3q/schema.hpp"

namespace d3q {

// A dialogue-act template without values: an intent and at most one slot.
// Both the agent action space and the user response space used by the world
// model are enumerations of these.
struct ActTemplate {
  int id = 0;
  Intent intent = Intent::inform;
  std::optional<Slot> slot;

  friend bool operator==(const ActTemplate&, const ActTemplate&) = default;
};

inline std::string to_string(const ActTemplate& t) {
  std::string out(name(t.intent));
  out += '(';
  if (t.slot) out += name(*t.slot);
  out += ')';
  return out;
}

namespace detail {

inline bool is_auxiliary(Intent i) {
  return i == Intent::confirm_question || i == Intent::confirm_answer ||
         i == Intent::deny || i == Intent::not_sure ||
         i == Intent::multiple_choice;
}

inline std::vector<ActTemplate> build_agent_actions() {
  std::vector<ActTemplate> out;
  auto add = [&out](Intent i, std::optional<Slot> s) {
    out.push_back({static_cast<int>(out.size()), i, s});
  };
  // Agent asks the user for a constraint value.
  for (int i = 0; i < kSlotCount; ++i) {
    auto s = static_cast<Slot>(i);
    if (informable(s)) add(Intent::request, s);
  }
  // Agent answers a user request from the knowledge base.
  for (int i = 0; i < kSlotCount; ++i) {
    auto s = static_cast<Slot>(i);
    if (requestable(s) && s != Slot::ticket) add(Intent::inform, s);
  }
  add(Intent::inform, Slot::taskcomplete);
  for (Intent i : {Intent::confirm_question, Intent::confirm_answer,
                   Intent::greeting, Intent::closing, Intent::thanks,
                   Intent::deny, Intent::not_sure, Intent::multiple_choice})
    add(i, std::nullopt);
  return out;
}

inline std::vector<ActTemplate> build_user_templates() {
  std::vector<ActTemplate> out;
  auto add = [&out](Intent i, std::optional<Slot> s) {
    out.push_back({static_cast<int>(out.size()), i, s});
  };
  for (int i = 0; i < kSlotCount; ++i) {
    auto s = static_cast<Slot>(i);
    if (informable(s)) add(Intent::inform, s);
  }
  for (int i = 0; i < kSlotCount; ++i) {
    auto s = static_cast<Slot>(i);
    if (requestable(s)) add(Intent::request, s);
  }
  add(Intent::not_sure, std::nullopt);
  add(Intent::thanks, std::nullopt);
  add(Intent::closing, std::nullopt);
  return out;
}

inline bool template_active(const ActTemplate& t, const Schema& schema) {
  if (!schema.active(t.intent)) return false;
  if (t.slot && !schema.active(*t.slot)) return false;
  return true;
}

}  // namespace detail

// Agent action enumeration: request(slot) per informable slot, inform(slot)
// per requestable slot except ticket, inform(taskcomplete), then eight
// slot-less acts. Fixed width for the 18-slot vocabulary.
inline const std::vector<ActTemplate>& agent_actions() {
  static const std::vector<ActTemplate> actions = detail::build_agent_actions();
  return actions;
}

inline int num_agent_actions() { return static_cast<int>(agent_actions().size()); }

inline int agent_action_id(Intent intent, std::optional<Slot> slot = std::nullopt) {
  for (const auto& a : agent_actions())
    if (a.intent == intent && a.slot == slot) return a.id;
  throw SchemaViolation("no agent action " + std::string(name(intent)));
}

inline std::vector<bool> agent_action_mask(const Schema& schema) {
  std::vector<bool> mask;
  mask.reserve(agent_actions().size());
  for (const auto& a : agent_actions()) {
    bool on = detail::template_active(a, schema);
    if (!a.slot && detail::is_auxiliary(a.intent) && !schema.auxiliary_actions)
      on = false;
    mask.push_back(on);
  }
  return mask;
}

// User response templates predicted by the world model; covers every
// non-opening act the user simulator emits.
inline const std::vector<ActTemplate>& user_templates() {
  static const std::vector<ActTemplate> templates = detail::build_user_templates();
  return templates;
}

inline int num_user_templates() { return static_cast<int>(user_templates().size()); }

inline int user_template_id(Intent intent, std::optional<Slot> slot = std::nullopt) {
  for (const auto& t : user_templates())
    if (t.intent == intent && t.slot == slot) return t.id;
  throw SchemaViolation("no user template " + std::string(name(intent)));
}

inline std::vector<bool> user_template_mask(const Schema& schema) {
  std::vector<bool> mask;
  for (const auto& t : user_templates()) mask.push_back(detail::template_active(t, schema));
  return mask;
}

// Maps a single-template user act back to its template id.
inline std::optional<int> template_of(const DialogueAct& act) {
  std::optional<Slot> slot;
  if (act.intent == Intent::inform) {
    if (act.inform_slots.size() != 1 || !act.request_slots.empty()) return std::nullopt;
    slot = act.inform_slots.begin()->first;
  } else if (act.intent == Intent::request) {
    if (act.request_slots.size() != 1 || !act.inform_slots.empty()) return std::nullopt;
    slot = *act.request_slots.begin();
  } else if (!act.inform_slots.empty() || !act.request_slots.empty()) {
    return std::nullopt;
  }
  for (const auto& t : user_templates())
    if (t.intent == act.intent && t.slot == slot) return t.id;
  return std::nullopt;
}

}  // namespace d3q
