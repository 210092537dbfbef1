#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "d3q/dqn.hpp"
#include "d3q/errors.hpp"
#include "d3q/nlu.hpp"
#include "d3q/simulator.hpp"
#include "d3q/user_goal.hpp"

namespace d3q {

struct AgentSnapshot {
  std::string label;
  std::shared_ptr<const QAgent> agent;
};

enum class Outcome { ongoing, success, abandoned, failed };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::ongoing: return "ongoing";
    case Outcome::success: return "success";
    case Outcome::abandoned: return "abandoned";
    case Outcome::failed: return "failed";
  }
  return "";
}

struct ServiceTurn {
  int turn = 0;
  std::string user_text;
  DialogueAct user_act;
  DialogueAct agent_act;
  std::string agent_text;
};

struct HumanSession {
  std::string id;
  std::size_t agent = 0;  // index into the pool; never sent before close
  UserGoal goal;
  TrackerState state;
  std::vector<ServiceTurn> turns;
  Outcome outcome = Outcome::ongoing;
  bool dialogue_over = false;  // agent booked or said goodbye; waiting for a verdict
  bool oracle_success = false;
  std::string verdict;
  double reward = 0.0;
  std::mutex mu;
};

inline nlohmann::json goal_card(const UserGoal& goal) {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [s, v] : goal.constraints) c[std::string(name(s))] = v;
  nlohmann::json r = nlohmann::json::array();
  for (Slot s : goal.requests) r.push_back(std::string(name(s)));
  return {{"constraints", c}, {"requests", r}};
}

struct AgentTally {
  int dialogues = 0;
  int successes = 0;
};

// Human-evaluation sessions against a pool of trained agents. Agents are
// assigned uniformly at random and stay hidden until the session closes.
// Inference only: the pool is never trained.
class EvalService {
 public:
  EvalService(std::vector<AgentSnapshot> pool, KnowledgeBase kb, Schema schema,
              std::uint64_t seed = 1, std::string log_path = {}, RewardSpec reward = {})
      : pool_(std::move(pool)),
        kb_(std::move(kb)),
        schema_(std::move(schema)),
        nlu_(kb_),
        reward_(reward),
        rng_(seed),
        tallies_(pool_.size()) {
    if (!log_path.empty()) {
      log_.open(log_path, std::ios::app);
      if (!log_) throw FormatError("cannot write " + log_path);
    }
  }

  std::size_t pool_size() const { return pool_.size(); }

  nlohmann::json open_session() {
    if (pool_.empty()) throw NoAgents("no agents loaded");
    auto s = std::make_shared<HumanSession>();
    {
      std::lock_guard lock(mu_);
      s->id = "s" + std::to_string(++next_id_);
      s->agent = std::uniform_int_distribution<std::size_t>(0, pool_.size() - 1)(rng_);
      s->goal = sample_user_goal(rng_, kb_, schema_);
      s->state = initial_state(kb_);
      sessions_[s->id] = s;
    }
    nlohmann::json out = {{"id", s->id}, {"goal", goal_card(s->goal)}, {"status", "ongoing"}};
    log_event({{"event", "open"}, {"id", s->id}, {"goal", to_json(s->goal)}});
    return out;
  }

  nlohmann::json user_turn(const std::string& id, const std::string& utterance) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->outcome != Outcome::ongoing || s->dialogue_over)
      throw SessionClosed("session " + id + " is closed");

    ServiceTurn t;
    t.turn = static_cast<int>(s->turns.size()) + 1;
    t.user_text = utterance;
    t.user_act = nlu_.parse(utterance, schema_);

    if (t.turn > reward_.max_turns) {
      s->turns.push_back(t);
      s->reward += reward_.failure;
      finalize(*s, Outcome::failed, "turn limit");
      return {{"id", id},
              {"turn", t.turn},
              {"user_frame", to_json(t.user_act)},
              {"reply", "We have run out of turns. This dialogue has ended."},
              {"status", to_string(s->outcome)},
              {"record", record(*s, true)}};
    }

    s->state = update_tracker(std::move(s->state), t.user_act, kb_, schema_);
    const QAgent& agent = *pool_[s->agent].agent;
    const int a = agent.greedy_action(encode_state(s->state), agent_action_mask(schema_));
    t.agent_act = ground_agent_action(agent_actions()[a], s->state, kb_, schema_);
    s->state = update_tracker(std::move(s->state), t.agent_act, kb_, schema_);
    t.agent_text = render_agent_act(t.agent_act);
    s->reward += reward_.per_turn;

    const bool books = t.agent_act.inform_slots.count(Slot::taskcomplete) != 0;
    if (books || t.agent_act.intent == Intent::closing) {
      s->dialogue_over = true;
      s->oracle_success =
          books && SimulatorSession(s->goal, schema_, reward_).booking_satisfies_goal(t.agent_act);
      s->reward += s->oracle_success ? reward_.success : reward_.failure;
    }
    s->turns.push_back(t);
    log_event({{"event", "turn"},
               {"id", id},
               {"turn", t.turn},
               {"user_text", t.user_text},
               {"user_act", to_json(t.user_act)},
               {"agent_act", to_json(t.agent_act)},
               {"agent_text", t.agent_text}});
    return {{"id", id},
            {"turn", t.turn},
            {"user_frame", to_json(t.user_act)},
            {"agent_frame", to_json(t.agent_act)},
            {"reply", t.agent_text},
            {"dialogue_over", s->dialogue_over},
            {"status", to_string(s->outcome)}};
  }

  // verdict is "success" or "abandon"; abandoning counts as a failure.
  nlohmann::json close_session(const std::string& id, const std::string& verdict) {
    if (verdict != "success" && verdict != "abandon")
      throw std::invalid_argument("verdict must be success or abandon");
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->outcome != Outcome::ongoing) throw SessionClosed("session " + id + " is closed");
    finalize(*s, verdict == "success" ? Outcome::success : Outcome::failed, verdict);
    return record(*s, true);
  }

  // Client view; the agent is revealed only once the session is closed.
  nlohmann::json session_view(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return record(*s, s->outcome != Outcome::ongoing);
  }

  nlohmann::json results() {
    std::lock_guard lock(mu_);
    nlohmann::json rows = nlohmann::json::array();
    int total = 0;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      const auto& t = tallies_[i];
      total += t.dialogues;
      rows.push_back({{"agent", pool_[i].label},
                      {"dialogues", t.dialogues},
                      {"successes", t.successes},
                      {"success_rate", t.dialogues ? double(t.successes) / t.dialogues : 0.0}});
    }
    return {{"agents", rows}, {"total", total}};
  }

 private:
  std::shared_ptr<HumanSession> find(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session " + id);
    return it->second;
  }

  void finalize(HumanSession& s, Outcome o, const std::string& verdict) {
    s.outcome = o;
    s.verdict = verdict;
    {
      std::lock_guard lock(mu_);
      ++tallies_[s.agent].dialogues;
      tallies_[s.agent].successes += o == Outcome::success ? 1 : 0;
    }
    log_event({{"event", "close"}, {"record", record(s, true)}});
  }

  nlohmann::json record(const HumanSession& s, bool reveal) const {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : s.turns)
      turns.push_back({{"turn", t.turn},
                       {"user_text", t.user_text},
                       {"user_act", to_json(t.user_act)},
                       {"agent_act", to_json(t.agent_act)},
                       {"agent_text", t.agent_text}});
    nlohmann::json out = {{"id", s.id},
                          {"goal", goal_card(s.goal)},
                          {"turns", turns},
                          {"status", to_string(s.outcome)},
                          {"dialogue_over", s.dialogue_over}};
    if (reveal) {
      out["agent"] = pool_[s.agent].label;
      out["verdict"] = s.verdict;
      out["oracle_success"] = s.oracle_success;
      out["discrepancy"] = s.outcome == Outcome::success && !s.oracle_success;
      out["reward"] = s.reward;
    }
    return out;
  }

  void log_event(const nlohmann::json& e) {
    if (!log_.is_open()) return;
    std::lock_guard lock(log_mu_);
    log_ << e.dump() << '\n' << std::flush;
  }

  std::vector<AgentSnapshot> pool_;
  KnowledgeBase kb_;
  Schema schema_;
  KeywordNlu nlu_;
  RewardSpec reward_;
  std::mt19937_64 rng_;
  std::vector<AgentTally> tallies_;
  std::map<std::string, std::shared_ptr<HumanSession>> sessions_;
  std::uint64_t next_id_ = 0;
  std::mutex mu_, log_mu_;
  std::ofstream log_;
};

}  // namespace d3q
