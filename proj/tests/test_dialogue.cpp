#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "d3q/evaluation.hpp"
#include "d3q/nlu.hpp"

using namespace d3q;

namespace {

const KnowledgeBase& kb() {
  static const KnowledgeBase k = KnowledgeBase::synthetic();
  return k;
}

DialogueAct agent_act(Intent i, std::map<Slot, std::string> informs = {}, std::set<Slot> requests = {}) {
  return DialogueAct{Speaker::agent, i, std::move(informs), std::move(requests)};
}

UserGoal fixed_goal() {
  UserGoal g;
  g.source_row = 0;
  const MovieRow& r = kb().row(0);
  g.constraints = {{Slot::moviename, r.at(Slot::moviename)},
                   {Slot::numberofpeople, "2"},
                   {Slot::date, r.at(Slot::date)}};
  g.requests = {Slot::ticket, Slot::theater, Slot::starttime};
  return g;
}

DialogueAct booking_for(const UserGoal& g) {
  TrackerState st = initial_state(kb());
  st.user_constraints = g.constraints;
  return ground_agent_action(agent_actions()[agent_action_id(Intent::inform, Slot::taskcomplete)],
                             st, kb(), Schema::full_domain());
}

}  // namespace

TEST(Schema, VocabularySizes) {
  EXPECT_EQ(kIntentCount, 11);
  EXPECT_EQ(Schema::full_domain().slots.count(), 16u);
  EXPECT_EQ(Schema::domain_extension().slots.count(), 18u);
  for (int i = 0; i < kSlotCount; ++i) EXPECT_EQ(parse_slot(name(static_cast<Slot>(i))), static_cast<Slot>(i));
  for (int i = 0; i < kIntentCount; ++i)
    EXPECT_EQ(parse_intent(name(static_cast<Intent>(i))), static_cast<Intent>(i));
  EXPECT_FALSE(parse_slot("popcorn"));
}

TEST(Schema, ActJsonRoundTrip) {
  const DialogueAct a{Speaker::user, Intent::request, {{Slot::moviename, "zootopia"}}, {Slot::theater}};
  EXPECT_EQ(act_from_json(to_json(a)), a);
  EXPECT_EQ(to_string(a), "request(theater; moviename=zootopia)");
}

TEST(Schema, InactiveSlotIsRejected) {
  const Schema stage0 = Environment::domain_extension()->schema_at(0);
  const DialogueAct a{Speaker::user, Intent::inform, {{Slot::price, "$10"}}, {}};
  EXPECT_THROW(a.validate(stage0), SchemaViolation);
  EXPECT_NO_THROW(a.validate(Schema::full_domain()));
}

TEST(Actions, IdsAreDenseAndMasksFollowTheSchema) {
  const auto& acts = agent_actions();
  for (std::size_t i = 0; i < acts.size(); ++i) EXPECT_EQ(acts[i].id, static_cast<int>(i));
  const auto full = agent_action_mask(Schema::full_domain());
  const auto ext = agent_action_mask(Schema::domain_extension());
  const auto stage0 = agent_action_mask(Environment::domain_extension()->schema_at(0));
  auto on = [](const std::vector<bool>& m) { return std::count(m.begin(), m.end(), true); };
  EXPECT_LT(on(stage0), on(full));
  EXPECT_LT(on(full), on(ext));
  EXPECT_FALSE(full[agent_action_id(Intent::request, Slot::genre)]);
  EXPECT_TRUE(ext[agent_action_id(Intent::request, Slot::genre)]);
}

TEST(Actions, EverySimulatorResponseHasATemplate) {
  std::mt19937_64 rng(11);
  const Schema schema = Schema::full_domain();
  auto random_agent = [&](const TrackerState&, const Eigen::VectorXd&) {
    const auto mask = agent_action_mask(schema);
    std::vector<int> active;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) active.push_back(static_cast<int>(i));
    return active[std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng)];
  };
  for (int i = 0; i < 200; ++i) {
    const Episode ep = run_user_episode(random_agent, sample_user_goal(rng, kb(), schema), kb(),
                                        schema, RewardSpec{}, rng);
    for (const auto& t : ep.transcript) EXPECT_TRUE(template_of(t.user_act)) << to_string(t.user_act);
  }
}

TEST(Tracker, EncodingWidthIsFixedAcrossSchemas) {
  const TrackerState s = initial_state(kb());
  EXPECT_EQ(encode_state(s).size(), kStateDim);
  const auto env = Environment::domain_extension();
  for (int e : {0, 50, 130}) EXPECT_EQ(agent_action_mask(env->schema_at(e)).size(), agent_actions().size());
}

TEST(Tracker, AccumulatesConstraintsAndCountsRepeats) {
  const Schema schema = Schema::full_domain();
  TrackerState s = initial_state(kb());
  EXPECT_EQ(s.kb_match_count, kb().size());
  s = update_tracker(s, DialogueAct{Speaker::user, Intent::inform, {{Slot::moviename, "zootopia"}}, {}},
                     kb(), schema);
  EXPECT_EQ(s.kb_match_count, kb().count({{Slot::moviename, "zootopia"}}));
  const DialogueAct ask = agent_act(Intent::request, {}, {Slot::date});
  s = update_tracker(s, ask, kb(), schema);
  s = update_tracker(s, ask, kb(), schema);
  EXPECT_EQ(s.turn, 2);
  EXPECT_EQ(s.agent_repeats, 1);
  const auto v = encode_state(s);
  EXPECT_DOUBLE_EQ(v[StateLayout::turn], 2.0 / kMaxTurns);
  EXPECT_DOUBLE_EQ(v[StateLayout::repeats + 1], 1.0);
  EXPECT_DOUBLE_EQ(v[StateLayout::user_informed + index(Slot::moviename)], 1.0);
  EXPECT_DOUBLE_EQ(v[StateLayout::requested + index(Slot::date)], 1.0);
  EXPECT_DOUBLE_EQ(v[StateLayout::kb_bucket + kKbBuckets - 1], 1.0);
}

TEST(KnowledgeBase, SyntheticTableIsDeterministicAndRoundTrips) {
  const KnowledgeBase again = KnowledgeBase::synthetic();
  EXPECT_EQ(again.rows(), kb().rows());
  EXPECT_GT(kb().size(), 1000u);
  std::stringstream buf;
  kb().save(buf);
  EXPECT_EQ(KnowledgeBase::load(buf).rows(), kb().rows());
}

TEST(KnowledgeBase, QueryAgreesWithALinearScan) {
  const Constraints c{{Slot::moviename, "deadpool"}, {Slot::date, "friday"}, {Slot::numberofpeople, "4"}};
  std::size_t n = 0;
  for (const auto& r : kb().rows())
    n += r.at(Slot::moviename) == "deadpool" && r.at(Slot::date) == "friday" ? 1 : 0;
  EXPECT_GT(n, 0u);
  EXPECT_EQ(kb().count(c), n);
  EXPECT_EQ(kb().query(c).size(), n);
  EXPECT_EQ(kb().first_match(c), kb().query(c).front());
}

TEST(KnowledgeBase, BundledFileMatchesTheSyntheticTable) {
  const std::string path = std::string(D3Q_DATA_DIR) + "/movie_kb.tsv";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "no bundled table";
  EXPECT_EQ(KnowledgeBase::load_file(path).rows(), kb().rows());
}

TEST(UserGoal, SampledGoalsAreSatisfiable) {
  std::mt19937_64 rng(3);
  const Schema schema = Schema::full_domain();
  for (int i = 0; i < 500; ++i) {
    const UserGoal g = sample_user_goal(rng, kb(), schema);
    EXPECT_TRUE(g.in_requests(Slot::ticket));
    EXPECT_TRUE(g.in_constraints(Slot::moviename));
    EXPECT_TRUE(g.in_constraints(Slot::numberofpeople));
    for (Slot s : {Slot::theater, Slot::starttime, Slot::date})
      EXPECT_NE(g.in_constraints(s), g.in_requests(s));
    EXPECT_TRUE(kb().row(g.source_row).matches(g.constraints));
    for (const auto& [s, v] : g.constraints) EXPECT_TRUE(schema.active(s));
    EXPECT_EQ(goal_from_json(to_json(g)), g);
  }
}

TEST(UserGoal, GoalFileRoundTrip) {
  std::mt19937_64 rng(4);
  std::vector<UserGoal> goals;
  for (int i = 0; i < 20; ++i) goals.push_back(sample_user_goal(rng, kb(), Schema::full_domain()));
  const auto path = std::filesystem::temp_directory_path() / "d3q_goals.jsonl";
  save_goals(path.string(), goals);
  EXPECT_EQ(load_goals(path.string()), goals);
  std::filesystem::remove(path);
}

TEST(Simulator, CorrectBookingPaysSuccessReward) {
  const UserGoal g = fixed_goal();
  SimulatorSession user(g, Schema::full_domain());
  const auto step = user.user_step(booking_for(g));
  EXPECT_TRUE(step.terminal);
  EXPECT_TRUE(step.success);
  EXPECT_DOUBLE_EQ(step.reward, -1.0 + 80.0);
  EXPECT_EQ(step.user_act.intent, Intent::thanks);
  EXPECT_THROW(user.user_step(booking_for(g)), SessionClosed);
}

TEST(Simulator, WrongBookingOrGoodbyeFails) {
  const UserGoal g = fixed_goal();
  UserGoal other = g;
  other.constraints[Slot::numberofpeople] = "3";
  SimulatorSession a(g, Schema::full_domain());
  const auto wrong = a.user_step(booking_for(other));
  EXPECT_FALSE(wrong.success);
  EXPECT_DOUBLE_EQ(wrong.reward, -1.0 - 40.0);

  SimulatorSession b(g, Schema::full_domain());
  const auto bye = b.user_step(agent_act(Intent::closing));
  EXPECT_TRUE(bye.terminal);
  EXPECT_DOUBLE_EQ(bye.reward, -41.0);
}

TEST(Simulator, AnswersRequestsFromTheGoal) {
  const UserGoal g = fixed_goal();
  SimulatorSession user(g, Schema::full_domain());
  const auto date = user.user_step(agent_act(Intent::request, {}, {Slot::date}));
  EXPECT_EQ(date.user_act.intent, Intent::inform);
  EXPECT_EQ(date.user_act.inform_slots.at(Slot::date), g.constraints.at(Slot::date));
  EXPECT_DOUBLE_EQ(date.reward, -1.0);
  const auto theater = user.user_step(agent_act(Intent::request, {}, {Slot::theater}));
  EXPECT_EQ(theater.user_act.intent, Intent::request);
  EXPECT_TRUE(theater.user_act.request_slots.count(Slot::theater));
  const auto genre = user.user_step(agent_act(Intent::request, {}, {Slot::genre}));
  EXPECT_EQ(genre.user_act.intent, Intent::not_sure);
}

TEST(Simulator, HangsUpAfterRepeatedActs) {
  SimulatorSession user(fixed_goal(), Schema::full_domain());
  const DialogueAct hi = agent_act(Intent::greeting);
  for (int i = 0; i <= kUserPatience; ++i) EXPECT_FALSE(user.user_step(hi).terminal);
  const auto last = user.user_step(hi);
  EXPECT_TRUE(last.terminal);
  EXPECT_FALSE(last.success);
}

TEST(Simulator, TurnLimitEndsInFailure) {
  SimulatorSession user(fixed_goal(), Schema::full_domain());
  SimulatorSession::Step step;
  int turns = 0;
  while (!user.terminal()) {
    step = user.user_step(agent_act(Intent::inform, {{Slot::price, "$" + std::to_string(turns)}}));
    ++turns;
  }
  EXPECT_EQ(turns, kMaxTurns);
  EXPECT_TRUE(step.timeout);
  EXPECT_DOUBLE_EQ(step.reward, -41.0);
}

TEST(Episode, RuleAgentBooksMostGoals) {
  const auto env = Environment::full_domain(kb());
  std::mt19937_64 rng(21);
  std::vector<Episode> eps;
  const EvalResult r = evaluate(rule_policy(), *env, Schema::full_domain(), 300, rng, &eps);
  EXPECT_GT(r.success_rate, 0.5);
  EXPECT_LT(r.success_rate, 0.9);
  for (const auto& ep : eps) {
    double sum = 0.0;
    for (const auto& t : ep.record.tuples) sum += t.reward;
    EXPECT_DOUBLE_EQ(sum, ep.episode_return);
    EXPECT_EQ(ep.record.features.size(), static_cast<std::size_t>(ep.turns));
    EXPECT_TRUE(ep.record.tuples.back().terminal);
    EXPECT_EQ(ep.success, ep.episode_return > 0.0);
  }
}

TEST(Extension, StagesOnlyEverAddVocabulary) {
  const auto sch = ExtensionSchedule::movie_extension();
  Schema prev = active_schema(sch, 0);
  for (int e = 1; e <= 200; ++e) {
    const Schema cur = active_schema(sch, e);
    EXPECT_EQ(prev.active_slots & ~cur.active_slots, std::bitset<kSlotCount>{});
    EXPECT_EQ(prev.active_intents & ~cur.active_intents, std::bitset<kIntentCount>{});
    EXPECT_EQ(cur.active_slots != prev.active_slots, sch.is_boundary(e)) << e;
    prev = cur;
  }
  EXPECT_EQ(prev.active_slots, Schema::domain_extension().slots);
}

TEST(Nlu, TheaterQuestionAboutAMovie) {
  const KeywordNlu nlu(kb());
  const DialogueAct a = nlu.parse("which theater will play the movie avergers3?", Schema::full_domain());
  EXPECT_EQ(a.intent, Intent::request);
  EXPECT_EQ(a.request_slots, std::set<Slot>{Slot::theater});
  EXPECT_EQ(a.inform_slots, (std::map<Slot, std::string>{{Slot::moviename, "avergers3"}}));
}

TEST(Nlu, InformsAndSocialActs) {
  const KeywordNlu nlu(kb());
  const Schema s = Schema::full_domain();
  const DialogueAct a = nlu.parse("Two tickets for Zootopia tomorrow at 4:00pm please", s);
  EXPECT_EQ(a.intent, Intent::inform);
  EXPECT_EQ(a.inform_slots.at(Slot::moviename), "zootopia");
  EXPECT_EQ(a.inform_slots.at(Slot::date), "tomorrow");
  EXPECT_EQ(a.inform_slots.at(Slot::starttime), "4:00pm");
  EXPECT_EQ(a.inform_slots.at(Slot::numberofpeople), "2");
  EXPECT_EQ(nlu.parse("thanks a lot", s).intent, Intent::thanks);
  EXPECT_EQ(nlu.parse("bye", s).intent, Intent::closing);
  EXPECT_EQ(nlu.parse("hmm", s).intent, Intent::not_sure);
}

TEST(Nlg, BookingSentenceCarriesTheTicketDetails) {
  const std::string text = render_agent_act(booking_for(fixed_goal()));
  EXPECT_NE(text.find("booked 2 tickets"), std::string::npos) << text;
  EXPECT_NE(text.find(kb().row(0).at(Slot::moviename)), std::string::npos);
}
