#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "d3q/errors.hpp"

namespace d3q {

// Intent and slot vocabularies. The ordering is part of the featurization
// contract and must never change; bump kSchemaVersion if it does.
inline constexpr std::uint32_t kSchemaVersion = 1;

enum class Intent : int {
  request,
  inform,
  deny,
  confirm_question,
  confirm_answer,
  greeting,
  closing,
  not_sure,
  multiple_choice,
  thanks,
  welcome,
};
inline constexpr int kIntentCount = 11;

enum class Slot : int {
  city,
  closing,
  date,
  distanceconstraints,
  greeting,
  moviename,
  numberofpeople,
  price,
  starttime,
  state,
  taskcomplete,
  theater,
  theater_chain,
  ticket,
  video_format,
  zip,
  genre,
  other,
};
inline constexpr int kSlotCount = 18;
inline constexpr int kFullDomainSlotCount = 16;

inline constexpr std::array<std::string_view, kIntentCount> kIntentNames = {
    "request", "inform",   "deny",           "confirm_question",
    "confirm_answer", "greeting", "closing", "not_sure",
    "multiple_choice", "thanks", "welcome"};

inline constexpr std::array<std::string_view, kSlotCount> kSlotNames = {
    "city",          "closing",   "date",         "distanceconstraints",
    "greeting",      "moviename", "numberofpeople", "price",
    "starttime",     "state",     "taskcomplete", "theater",
    "theater_chain", "ticket",    "video_format", "zip",
    "genre",         "other"};

inline constexpr int index(Intent i) { return static_cast<int>(i); }
inline constexpr int index(Slot s) { return static_cast<int>(s); }
inline constexpr std::string_view name(Intent i) { return kIntentNames[index(i)]; }
inline constexpr std::string_view name(Slot s) { return kSlotNames[index(s)]; }

inline std::optional<Intent> parse_intent(std::string_view text) {
  for (int i = 0; i < kIntentCount; ++i)
    if (kIntentNames[i] == text) return static_cast<Intent>(i);
  return std::nullopt;
}

inline std::optional<Slot> parse_slot(std::string_view text) {
  for (int i = 0; i < kSlotCount; ++i)
    if (kSlotNames[i] == text) return static_cast<Slot>(i);
  return std::nullopt;
}

// Slots a user may state a value for (constraints).
inline constexpr bool informable(Slot s) {
  switch (s) {
    case Slot::city:
    case Slot::date:
    case Slot::distanceconstraints:
    case Slot::moviename:
    case Slot::numberofpeople:
    case Slot::price:
    case Slot::starttime:
    case Slot::state:
    case Slot::theater:
    case Slot::theater_chain:
    case Slot::video_format:
    case Slot::zip:
    case Slot::genre:
    case Slot::other:
      return true;
    default:
      return false;
  }
}

// Slots a user may ask the agent about. numberofpeople is informable only.
inline constexpr bool requestable(Slot s) {
  return s == Slot::ticket || (informable(s) && s != Slot::numberofpeople);
}

inline constexpr std::array<Slot, 5> kRequiredSlots = {
    Slot::moviename, Slot::theater, Slot::starttime, Slot::date,
    Slot::numberofpeople};

inline constexpr bool required(Slot s) {
  for (Slot r : kRequiredSlots)
    if (r == s) return true;
  return false;
}

// A schema is the vocabulary in play plus which parts of it are currently
// switched on. Domain extension toggles the active bits over time; feature
// widths are always sized for all kSlotCount slots.
struct Schema {
  std::string name;
  std::bitset<kSlotCount> slots;
  std::bitset<kSlotCount> active_slots;
  std::bitset<kIntentCount> active_intents;
  // Agent actions built on confirm_question, confirm_answer, deny, not_sure
  // and multiple_choice. Users may still say not_sure when this is off.
  bool auxiliary_actions = true;

  static Schema full_domain() {
    Schema s;
    s.name = "full";
    for (int i = 0; i < kFullDomainSlotCount; ++i) s.slots.set(i);
    s.active_slots = s.slots;
    s.active_intents.set();
    return s;
  }

  static Schema domain_extension() {
    Schema s;
    s.name = "extension";
    s.slots.set();
    s.active_slots = s.slots;
    s.active_intents.set();
    return s;
  }

  bool active(Slot s) const { return active_slots.test(index(s)); }
  bool active(Intent i) const { return active_intents.test(index(i)); }

  std::vector<Slot> slot_list() const {
    std::vector<Slot> out;
    for (int i = 0; i < kSlotCount; ++i)
      if (slots.test(i)) out.push_back(static_cast<Slot>(i));
    return out;
  }

  std::vector<Slot> active_slot_list() const {
    std::vector<Slot> out;
    for (int i = 0; i < kSlotCount; ++i)
      if (active_slots.test(i)) out.push_back(static_cast<Slot>(i));
    return out;
  }

  friend bool operator==(const Schema&, const Schema&) = default;
};

// FNV-1a over the vocabulary; stamped into checkpoints so a file written
// against a different slot ordering is rejected on load.
inline std::uint64_t schema_hash() {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::string_view text) {
    for (unsigned char c : text) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (auto n : kIntentNames) mix(n);
  for (auto n : kSlotNames) mix(n);
  mix(std::to_string(kSchemaVersion));
  return h;
}

enum class Speaker { user, agent };

inline constexpr std::string_view name(Speaker s) {
  return s == Speaker::user ? "user" : "agent";
}

// Semantic frame exchanged by users, agents, the world model and the
// service protocol.
struct DialogueAct {
  Speaker speaker = Speaker::user;
  Intent intent = Intent::inform;
  std::map<Slot, std::string> inform_slots;
  std::set<Slot> request_slots;

  friend bool operator==(const DialogueAct&, const DialogueAct&) = default;

  // Throws SchemaViolation if the frame is malformed or touches inactive
  // parts of the schema.
  void validate(const Schema& schema) const {
    if (!schema.active(intent))
      throw SchemaViolation("inactive intent: " + std::string(name(intent)));
    for (const auto& [slot, value] : inform_slots) {
      if (!schema.active(slot))
        throw SchemaViolation("inactive slot: " + std::string(name(slot)));
    }
    for (Slot slot : request_slots) {
      if (!schema.active(slot))
        throw SchemaViolation("inactive slot: " + std::string(name(slot)));
    }
    if (intent == Intent::request && request_slots.empty())
      throw SchemaViolation("request act without request slots");
    if (intent == Intent::inform) {
      if (inform_slots.empty())
        throw SchemaViolation("inform act without inform slots");
      if (!request_slots.empty())
        throw SchemaViolation("inform act carries request slots");
    }
  }
};

inline nlohmann::json to_json(const DialogueAct& act) {
  nlohmann::json informs = nlohmann::json::object();
  for (const auto& [slot, value] : act.inform_slots)
    informs[std::string(name(slot))] = value;
  nlohmann::json requests = nlohmann::json::array();
  for (Slot slot : act.request_slots) requests.push_back(std::string(name(slot)));
  return {{"speaker", std::string(name(act.speaker))},
          {"intent", std::string(name(act.intent))},
          {"inform_slots", std::move(informs)},
          {"request_slots", std::move(requests)}};
}

inline DialogueAct act_from_json(const nlohmann::json& j) {
  try {
    DialogueAct act;
    const auto speaker = j.at("speaker").get<std::string>();
    if (speaker == "user")
      act.speaker = Speaker::user;
    else if (speaker == "agent")
      act.speaker = Speaker::agent;
    else
      throw FormatError("unknown speaker: " + speaker);
    auto intent = parse_intent(j.at("intent").get<std::string>());
    if (!intent) throw FormatError("unknown intent");
    act.intent = *intent;
    for (const auto& [key, value] : j.at("inform_slots").items()) {
      auto slot = parse_slot(key);
      if (!slot) throw FormatError("unknown slot: " + key);
      act.inform_slots.emplace(*slot, value.get<std::string>());
    }
    for (const auto& item : j.at("request_slots")) {
      auto slot = parse_slot(item.get<std::string>());
      if (!slot) throw FormatError("unknown slot: " + item.get<std::string>());
      act.request_slots.insert(*slot);
    }
    return act;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed dialogue act: ") + e.what());
  }
}

// Compact human-readable form, e.g. request(theater; moviename=avengers3).
inline std::string to_string(const DialogueAct& act) {
  std::string out(name(act.intent));
  out += '(';
  bool first = true;
  for (Slot s : act.request_slots) {
    if (!first) out += ',';
    out += name(s);
    first = false;
  }
  if (!act.inform_slots.empty()) {
    if (!act.request_slots.empty()) out += "; ";
    first = true;
    for (const auto& [slot, value] : act.inform_slots) {
      if (!first) out += ',';
      out += std::string(name(slot)) + "=" + value;
      first = false;
    }
  }
  out += ')';
  return out;
}

}  // namespace d3q
