#pragma once

#include <algorithm>
#include <cctype>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "d3q/knowledge_base.hpp"
#include "d3q/schema.hpp"
#include "d3q/tracker.hpp"

namespace d3q {

// Keyword NLU: slot values by longest-first lexicon match against the KB,
// request slots by question phrases, the intent by keyword rules. State codes
// are left out of the lexicon ("or", "ma" and "in" are ordinary words).
class KeywordNlu {
 public:
  explicit KeywordNlu(const KnowledgeBase& kb) {
    for (Slot s : kb_columns())
      if (s != Slot::state)
        for (const auto& v : kb.values(s)) lexicon_.emplace_back(lower(v), s);
    std::stable_sort(lexicon_.begin(), lexicon_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  }

  DialogueAct parse(const std::string& utterance, const Schema& schema) const {
    std::string text = lower(utterance);
    DialogueAct act;
    act.speaker = Speaker::user;

    for (const auto& [value, slot] : lexicon_) {
      if (!schema.active(slot) || act.inform_slots.count(slot)) continue;
      if (auto pos = find_word(text, value); pos != std::string::npos) {
        act.inform_slots[slot] = value;
        text.replace(pos, value.size(), std::string(value.size(), ' '));
      }
    }
    if (auto people = party_size(text); people && schema.active(Slot::numberofpeople))
      act.inform_slots[Slot::numberofpeople] = *people;

    const bool question = text.find('?') != std::string::npos || starts_with_question(text);
    if (question)
      for (const auto& [phrase, slot] : request_phrases())
        if (schema.active(slot) && find_word(text, phrase) != std::string::npos)
          act.request_slots.insert(slot);

    if (!act.request_slots.empty()) {
      act.intent = Intent::request;
    } else if (!act.inform_slots.empty()) {
      act.intent = Intent::inform;
    } else if (has_any(text, {"thank", "thanks"})) {
      act.intent = Intent::thanks;
    } else if (has_any(text, {"bye", "goodbye"})) {
      act.intent = Intent::closing;
    } else if (has_any(text, {"hello", "hi", "hey"})) {
      act.intent = Intent::greeting;
    } else if (has_any(text, {"yes", "yeah", "correct", "right"})) {
      act.intent = Intent::confirm_answer;
    } else if (has_any(text, {"no", "nope", "wrong"})) {
      act.intent = Intent::deny;
    } else {
      act.intent = Intent::not_sure;
    }
    return act;
  }

 private:
  static std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '$' || c == ':';
  }

  static std::size_t find_word(const std::string& text, const std::string& w) {
    for (std::size_t pos = text.find(w); pos != std::string::npos; pos = text.find(w, pos + 1)) {
      const bool left = pos == 0 || !word_char(text[pos - 1]);
      const std::size_t end = pos + w.size();
      const bool right = end >= text.size() || !word_char(text[end]);
      if (left && right) return pos;
    }
    return std::string::npos;
  }

  static bool has_any(const std::string& text, std::initializer_list<const char*> words) {
    for (const char* w : words)
      if (find_word(text, w) != std::string::npos) return true;
    return false;
  }

  static bool starts_with_question(const std::string& text) {
    for (const char* w : {"which", "what", "when", "where", "how", "can", "could", "is", "are",
                          "do", "does"}) {
      const auto pos = text.find_first_not_of(' ');
      if (pos != std::string::npos && find_word(text, w) == pos) return true;
    }
    return false;
  }

  static std::optional<std::string> party_size(const std::string& text) {
    static const char* words[] = {"one", "two", "three", "four", "five",
                                  "six", "seven", "eight", "nine"};
    for (const char* unit : {"tickets", "ticket", "people", "persons", "seats", "of us"}) {
      for (std::size_t pos = text.find(unit); pos != std::string::npos;
           pos = text.find(unit, pos + 1)) {
        std::size_t end = pos;
        while (end > 0 && text[end - 1] == ' ') --end;
        std::size_t begin = end;
        while (begin > 0 && std::isalnum(static_cast<unsigned char>(text[begin - 1]))) --begin;
        const std::string num = text.substr(begin, end - begin);
        if (num.size() == 1 && num[0] >= '1' && num[0] <= '9') return num;
        for (int i = 0; i < 9; ++i)
          if (num == words[i]) return std::to_string(i + 1);
      }
    }
    return std::nullopt;
  }

  static const std::vector<std::pair<std::string, Slot>>& request_phrases() {
    static const std::vector<std::pair<std::string, Slot>> p = {
        {"theater", Slot::theater},         {"theatre", Slot::theater},
        {"cinema", Slot::theater},          {"where", Slot::theater},
        {"what time", Slot::starttime},     {"when", Slot::starttime},
        {"start time", Slot::starttime},    {"showtime", Slot::starttime},
        {"showtimes", Slot::starttime},     {"what day", Slot::date},
        {"which day", Slot::date},          {"date", Slot::date},
        {"how much", Slot::price},          {"price", Slot::price},
        {"cost", Slot::price},              {"which movie", Slot::moviename},
        {"what movie", Slot::moviename},    {"what movies", Slot::moviename},
        {"genre", Slot::genre},             {"zip", Slot::zip},
        {"zip code", Slot::zip},            {"city", Slot::city},
        {"format", Slot::video_format},     {"chain", Slot::theater_chain},
        {"how far", Slot::distanceconstraints}, {"which state", Slot::state},
    };
    return p;
  }

  std::vector<std::pair<std::string, Slot>> lexicon_;
};

namespace detail {

inline std::string slot_phrase(Slot s) {
  switch (s) {
    case Slot::moviename: return "movie";
    case Slot::starttime: return "start time";
    case Slot::numberofpeople: return "number of tickets";
    case Slot::theater_chain: return "theater chain";
    case Slot::video_format: return "format";
    case Slot::distanceconstraints: return "location";
    case Slot::zip: return "zip code";
    default: return std::string(name(s));
  }
}

}  // namespace detail

// Template NLG for agent acts.
inline std::string render_agent_act(const DialogueAct& act) {
  using detail::slot_phrase;
  switch (act.intent) {
    case Intent::request: {
      const Slot s = *act.request_slots.begin();
      switch (s) {
        case Slot::moviename: return "Which movie would you like to see?";
        case Slot::theater: return "Which theater would you like?";
        case Slot::starttime: return "What time would you like to go?";
        case Slot::date: return "Which day would you like to go?";
        case Slot::numberofpeople: return "How many tickets do you need?";
        default: return "Do you have a preference for the " + slot_phrase(s) + "?";
      }
    }
    case Intent::inform: {
      const auto task = act.inform_slots.find(Slot::taskcomplete);
      if (task != act.inform_slots.end()) {
        if (task->second != kTicketAvailable)
          return "Sorry, I could not find tickets matching your request.";
        auto get = [&act](Slot s) {
          auto it = act.inform_slots.find(s);
          return it == act.inform_slots.end() ? std::string("?") : it->second;
        };
        return "Great, I have booked " + get(Slot::numberofpeople) + " tickets for " +
               get(Slot::moviename) + " at " + get(Slot::theater) + " on " + get(Slot::date) +
               " at " + get(Slot::starttime) + ".";
      }
      const auto& [slot, value] = *act.inform_slots.begin();
      if (value == kNoMatch)
        return "Sorry, I can't find a " + slot_phrase(slot) + " matching your request.";
      return "The " + slot_phrase(slot) + " is " + value + ".";
    }
    case Intent::greeting: return "Hello, how can I help you?";
    case Intent::closing: return "Goodbye.";
    case Intent::thanks: return "Thank you.";
    case Intent::welcome: return "You're welcome.";
    case Intent::confirm_question: return "Could you confirm that for me?";
    case Intent::confirm_answer: return "Yes, that's right.";
    case Intent::deny: return "No, that's not available.";
    case Intent::not_sure: return "I'm not sure.";
    case Intent::multiple_choice: return "There are several options. Which one would you like?";
  }
  return "";
}

}  // namespace d3q
