#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "d3q/config.hpp"
#include "d3q/trainer.hpp"

using namespace d3q;

namespace {

std::shared_ptr<const Environment> env() {
  static const auto e = Environment::full_domain();
  return e;
}

TrainConfig small(AgentKind agent, int k = 3) {
  TrainConfig c;
  c.agent = agent;
  c.k = k;
  c.epochs = 2;
  c.seed = 7;
  c.world_corpus_dialogues = 20;
  c.world_pretrain_passes = 1;
  c.eval_every = 1;
  c.eval_dialogues = 10;
  return c;
}

}  // namespace

TEST(TrainConfig, LabelsAndBudgets) {
  TrainConfig c;
  c.agent = AgentKind::dqn_k;
  c.k = 5;
  EXPECT_EQ(c.label(), "DQN(5)");
  EXPECT_EQ(c.real_per_epoch(), 50);
  EXPECT_EQ(c.planning_quota(), 0);
  c.agent = AgentKind::d3q;
  c.fixed_discriminator = true;
  EXPECT_EQ(c.label(), "D3Q(5)+fixed-D");
  EXPECT_EQ(c.real_per_epoch(), 10);
  EXPECT_EQ(c.planning_quota(), 40);
}

TEST(TrainConfig, ValidationRejectsContradictions) {
  TrainConfig c;
  c.agent = AgentKind::ddq;
  c.k = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.k = 5;
  c.fixed_world = c.rand_init_world = true;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.rand_init_world = false;
  EXPECT_NO_THROW(c.validate());
  c.fixed_discriminator = true;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.agent = AgentKind::dqn;
  c.fixed_world = true;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, ParsesKeyValueFiles) {
  std::istringstream in(
      "# D3Q with ten planning steps\n"
      "agent = d3q\n"
      "k = 10   # inline comment\n"
      "seed=4\n"
      "\n"
      "fixed_discriminator = yes\n"
      "learning_rate = 0.002\n");
  const TrainConfig c = parse_config(in);
  EXPECT_EQ(c.agent, AgentKind::d3q);
  EXPECT_EQ(c.k, 10);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_TRUE(c.fixed_discriminator);
  EXPECT_DOUBLE_EQ(c.optimizer.learning_rate, 0.002);
}

TEST(Config, DumpRoundTrips) {
  TrainConfig c;
  c.agent = AgentKind::ddq;
  c.k = 10;
  c.fixed_world = true;
  c.domain = Domain::extension;
  c.checkpoint_dir = "ckpt";
  std::istringstream in(dump_config(c));
  const TrainConfig back = parse_config(in);
  EXPECT_EQ(back.label(), c.label());
  EXPECT_EQ(back.domain, Domain::extension);
  EXPECT_EQ(back.checkpoint_dir, "ckpt");
}

TEST(Config, BadInputIsReported) {
  TrainConfig c;
  EXPECT_THROW(set_option(c, "colour", "red"), FormatError);
  EXPECT_THROW(set_option(c, "k", "many"), FormatError);
  EXPECT_THROW(set_option(c, "agent", "ppo"), FormatError);
  EXPECT_THROW(set_option(c, "fixed_world", "maybe"), FormatError);
  std::istringstream in("just words\n");
  EXPECT_THROW(parse_config(in), FormatError);
}

TEST(Trainer, PrefillUsesRuleDialogues) {
  Trainer t(small(AgentKind::dqn), env());
  t.rbs_prefill();
  EXPECT_GT(t.real_buffer().size(), 50u);
  EXPECT_THROW(t.rbs_prefill(), std::logic_error);
}

TEST(Trainer, HalfScoreFillsTheQuotaWithoutFallback) {
  TrainConfig c = small(AgentKind::d3q, 4);
  Trainer t(c, env());
  t.set_score_override([](const EpisodeRecord&) { return 0.5; });
  for (int e = 0; e < 2; ++e) {
    const EpochStats st = t.run_epoch(e);
    EXPECT_EQ(st.planning_attempts, c.planning_quota());
    EXPECT_EQ(st.accepted_sessions, c.planning_quota());
    EXPECT_EQ(st.fallback_sessions, 0);
    EXPECT_FALSE(st.attempt_cap_warning);
    EXPECT_GE(st.simulated_buffer_sessions, st.high_quality_sessions);
  }
  EXPECT_TRUE(t.gate_invariant_holds());
  EXPECT_TRUE(t.warnings().empty());
  for (const auto& e : t.high_quality_buffer()) {
    const auto& a = t.audit().at(e.session);
    EXPECT_TRUE(a.gated);
    EXPECT_TRUE(a.accepted);
    EXPECT_DOUBLE_EQ(a.score, 0.5);
  }
}

TEST(Trainer, AttemptCapFallsBackAndIsFlagged) {
  TrainConfig c = small(AgentKind::d3q, 3);
  c.attempt_cap = 25;
  Trainer t(c, env());
  t.set_score_override([](const EpisodeRecord&) { return 0.9; });
  const EpochStats st = t.run_epoch(0);
  EXPECT_EQ(st.planning_attempts, c.attempt_cap * c.planning_steps());
  EXPECT_TRUE(st.attempt_cap_warning);
  EXPECT_EQ(st.accepted_sessions, c.planning_quota());
  EXPECT_EQ(st.fallback_sessions, c.planning_quota());
  ASSERT_EQ(t.warnings().size(), 1u);
  EXPECT_NE(t.warnings()[0].find("attempt cap"), std::string::npos);
  for (const auto& e : t.high_quality_buffer()) {
    const auto& a = t.audit().at(e.session);
    EXPECT_TRUE(a.fallback);
    EXPECT_FALSE(a.accepted);
  }
  EXPECT_FALSE(t.gate_invariant_holds());
}

TEST(Trainer, BudgetsPerAgent) {
  for (AgentKind kind : {AgentKind::dqn, AgentKind::dqn_k, AgentKind::ddq, AgentKind::d3q}) {
    TrainConfig c = small(kind, 3);
    Trainer t(c, env());
    if (kind == AgentKind::d3q) t.set_score_override([](const EpisodeRecord&) { return 0.5; });
    int real = 0, planned = 0;
    for (int e = 0; e < 2; ++e) {
      const EpochStats st = t.run_epoch(e);
      real += st.real_dialogues;
      planned += st.accepted_sessions;
    }
    const int per_epoch_real = kind == AgentKind::dqn_k ? 30 : 10;
    const int per_epoch_plan = kind == AgentKind::ddq || kind == AgentKind::d3q ? 20 : 0;
    EXPECT_EQ(real, 2 * per_epoch_real) << c.label();
    EXPECT_EQ(planned, 2 * per_epoch_plan) << c.label();
  }
}

TEST(Trainer, PlanningSessionsAreSimulatedAndDistinct) {
  Trainer t(small(AgentKind::ddq, 3), env());
  t.run_epoch(0);
  std::set<std::uint64_t> ids;
  for (const auto& ep : t.simulated_buffer()) {
    EXPECT_EQ(ep.provenance, Provenance::simulated);
    EXPECT_TRUE(ids.insert(ep.session).second);
    EXPECT_TRUE(ep.tuples.empty());
  }
  EXPECT_EQ(t.simulated_buffer().sessions(), 20u);
  EXPECT_EQ(t.high_quality_session_count(), 20u);
}

TEST(Trainer, SameSeedSameCurve) {
  TrainConfig c = small(AgentKind::d3q, 3);
  const auto a = Trainer(c, env()).run();
  const auto b = Trainer(c, env()).run();
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
  c.seed = 8;
  const auto other = Trainer(c, env()).run();
  EXPECT_NE(other[0].avg_reward + other[1].avg_reward, a[0].avg_reward + a[1].avg_reward);
}

TEST(Trainer, FixedWorldModelNeverChanges) {
  TrainConfig c = small(AgentKind::ddq, 3);
  c.fixed_world = true;
  Trainer t(c, env());
  t.rbs_prefill();
  std::vector<nn::Matrix> before;
  for (const nn::Param* p : t.world().params()) before.push_back(p->value);
  t.run_epoch(0);
  const auto after = t.world().params();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]->value);
}

TEST(Trainer, ExtensionDomainKeepsDimensions) {
  TrainConfig c = small(AgentKind::d3q, 3);
  c.domain = Domain::extension;
  const auto ext = Environment::domain_extension();
  Trainer t(c, ext);
  const auto rows = t.agent().q_net().params().front()->value.cols();
  for (int e : {0, 49, 50, 130}) {
    EXPECT_NO_THROW(t.run_epoch(e));
    EXPECT_EQ(t.agent().q_net().params().front()->value.cols(), rows);
  }
  EXPECT_EQ(rows, kStateDim);
}
