#pragma once

#include <bitset>
#include <initializer_list>
#include <vector>

#include "d3q/schema.hpp"

namespace d3q {

// One step of the domain-extension schedule: from `epoch` on, these slots and
// intents are switched on in addition to everything from earlier stages.
struct ExtensionStage {
  int epoch = 0;
  std::bitset<kSlotCount> slots;
  std::bitset<kIntentCount> intents;
  bool auxiliary_actions = false;
};

struct ExtensionSchedule {
  Schema base;
  std::vector<ExtensionStage> stages;

  // Always-full schedule for the full-domain experiments.
  static ExtensionSchedule full_domain() {
    ExtensionStage s;
    s.slots = Schema::full_domain().slots;
    s.intents.set();
    s.auxiliary_actions = true;
    return {Schema::full_domain(), {s}};
  }

  // Versioned stage table: required slots and basic acts first, then one
  // group of optional slots every 20 epochs from epoch 50 until epoch 130.
  static ExtensionSchedule movie_extension() {
    auto slots = [](std::initializer_list<Slot> list) {
      std::bitset<kSlotCount> b;
      for (Slot s : list) b.set(index(s));
      return b;
    };
    auto intents = [](std::initializer_list<Intent> list) {
      std::bitset<kIntentCount> b;
      for (Intent i : list) b.set(index(i));
      return b;
    };
    ExtensionSchedule sch{Schema::domain_extension(), {}};
    sch.stages.push_back(
        {0,
         slots({Slot::moviename, Slot::theater, Slot::starttime, Slot::date,
                Slot::numberofpeople, Slot::ticket, Slot::taskcomplete}),
         intents({Intent::request, Intent::inform, Intent::greeting, Intent::closing,
                  Intent::thanks, Intent::not_sure, Intent::welcome}),
         false});
    sch.stages.push_back({50, slots({Slot::price, Slot::video_format}), {}, false});
    sch.stages.push_back(
        {70, slots({Slot::theater_chain, Slot::distanceconstraints}), {}, false});
    sch.stages.push_back({90, slots({Slot::city, Slot::state, Slot::zip}), {}, false});
    sch.stages.push_back(
        {110, slots({Slot::greeting, Slot::closing}),
         intents({Intent::deny, Intent::confirm_question, Intent::confirm_answer,
                  Intent::multiple_choice}),
         true});
    sch.stages.push_back({130, slots({Slot::genre, Slot::other}), {}, false});
    return sch;
  }

  // Index of the last stage in force at `epoch`.
  int stage_at(int epoch) const {
    int k = 0;
    for (int i = 0; i < static_cast<int>(stages.size()); ++i)
      if (stages[i].epoch <= epoch) k = i;
    return k;
  }

  bool is_boundary(int epoch) const {
    for (const auto& s : stages)
      if (s.epoch == epoch && epoch > 0) return true;
    return false;
  }
};

// Schema with every stage up to `epoch` switched on. Monotone in epoch.
inline Schema active_schema(const ExtensionSchedule& schedule, int epoch) {
  Schema s = schedule.base;
  s.active_slots.reset();
  s.active_intents.reset();
  s.auxiliary_actions = false;
  for (const auto& stage : schedule.stages) {
    if (stage.epoch > epoch) continue;
    s.active_slots |= stage.slots;
    s.active_intents |= stage.intents;
    s.auxiliary_actions = s.auxiliary_actions || stage.auxiliary_actions;
  }
  s.active_slots &= s.slots;
  return s;
}

}  // namespace d3q
