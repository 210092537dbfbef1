#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "d3q/server.hpp"

using namespace d3q;

namespace {

const KnowledgeBase& kb() {
  static const KnowledgeBase k = KnowledgeBase::synthetic();
  return k;
}

// An agent whose greedy choice is always `action`.
std::shared_ptr<const QAgent> constant_agent(int action) {
  QAgentConfig qc;
  qc.state_dim = kStateDim;
  qc.num_actions = num_agent_actions();
  std::mt19937_64 rng(1);
  auto a = std::make_shared<QAgent>(qc, rng);
  for (nn::Param* p : a->q_net().params()) p->value.setZero();
  a->q_net().params().back()->value(action, 0) = 1.0;
  return a;
}

std::vector<AgentSnapshot> pool_of(std::initializer_list<std::pair<const char*, int>> spec) {
  std::vector<AgentSnapshot> pool;
  for (const auto& [label, action] : spec) pool.push_back({label, constant_agent(action)});
  return pool;
}

const int kAskDate = agent_action_id(Intent::request, Slot::date);
const int kBook = agent_action_id(Intent::inform, Slot::taskcomplete);
const int kBye = agent_action_id(Intent::closing);

}  // namespace

TEST(EvalService, AssignsAgentsUniformly) {
  EvalService svc(pool_of({{"a", kAskDate}, {"b", kBook}, {"c", kBye}}), kb(), Schema::full_domain(), 3);
  std::map<std::string, int> counts;
  constexpr int n = 3000;
  for (int i = 0; i < n; ++i) {
    const auto id = svc.open_session().at("id").get<std::string>();
    ++counts[svc.close_session(id, "abandon").at("agent").get<std::string>()];
  }
  for (const char* l : {"a", "b", "c"}) EXPECT_NEAR(counts[l] / double(n), 1.0 / 3.0, 0.03) << l;
  EXPECT_EQ(svc.results().at("total").get<int>(), n);
}

TEST(EvalService, AgentStaysHiddenUntilClose) {
  EvalService svc(pool_of({{"secret", kAskDate}}), kb(), Schema::full_domain());
  const auto opened = svc.open_session();
  EXPECT_FALSE(opened.contains("agent"));
  const auto id = opened.at("id").get<std::string>();
  const auto turn = svc.user_turn(id, "I want to see zootopia");
  EXPECT_FALSE(turn.contains("agent"));
  EXPECT_EQ(turn.at("reply").get<std::string>(), "Which day would you like to go?");
  EXPECT_FALSE(svc.session_view(id).contains("agent"));
  const auto closed = svc.close_session(id, "abandon");
  EXPECT_EQ(closed.at("agent"), "secret");
  EXPECT_EQ(closed.at("status"), "failed");
  EXPECT_EQ(svc.session_view(id).at("agent"), "secret");
}

TEST(EvalService, VerdictsFeedTheTally) {
  EvalService svc(pool_of({{"x", kBye}}), kb(), Schema::full_domain());
  const auto a = svc.open_session().at("id").get<std::string>();
  const auto b = svc.open_session().at("id").get<std::string>();
  EXPECT_TRUE(svc.user_turn(a, "hello").at("dialogue_over").get<bool>());
  EXPECT_THROW(svc.user_turn(a, "wait"), SessionClosed);
  const auto rec = svc.close_session(a, "success");
  EXPECT_EQ(rec.at("status"), "success");
  EXPECT_FALSE(rec.at("oracle_success").get<bool>());
  EXPECT_TRUE(rec.at("discrepancy").get<bool>());
  svc.close_session(b, "abandon");
  const auto r = svc.results().at("agents")[0];
  EXPECT_EQ(r.at("dialogues"), 2);
  EXPECT_EQ(r.at("successes"), 1);
  EXPECT_DOUBLE_EQ(r.at("success_rate").get<double>(), 0.5);
}

TEST(EvalService, OracleChecksTheBooking) {
  EvalService svc(pool_of({{"booker", kBook}}), kb(), Schema::full_domain());
  // State codes are outside the NLU lexicon, so pick a goal without one.
  nlohmann::json opened = svc.open_session();
  while (opened.at("goal").at("constraints").contains("state")) opened = svc.open_session();
  const auto id = opened.at("id").get<std::string>();
  const auto& c = opened.at("goal").at("constraints");
  std::string text = "I want " + c.at("numberofpeople").get<std::string>() + " tickets for " +
                     c.at("moviename").get<std::string>();
  for (const char* s : {"theater", "date", "starttime", "city", "video_format", "price",
                        "theater_chain", "distanceconstraints", "state", "zip"})
    if (c.contains(s)) text += " " + c.at(s).get<std::string>();
  const auto turn = svc.user_turn(id, text);
  EXPECT_TRUE(turn.at("dialogue_over").get<bool>());
  const auto rec = svc.close_session(id, "success");
  EXPECT_TRUE(rec.at("oracle_success").get<bool>()) << text;
  EXPECT_FALSE(rec.at("discrepancy").get<bool>());
  EXPECT_DOUBLE_EQ(rec.at("reward").get<double>(), -1.0 + 80.0);
}

TEST(EvalService, TurnLimitAutoFails) {
  EvalService svc(pool_of({{"asker", kAskDate}}), kb(), Schema::full_domain());
  const auto id = svc.open_session().at("id").get<std::string>();
  for (int i = 1; i <= kMaxTurns; ++i) EXPECT_EQ(svc.user_turn(id, "hmm").at("status"), "ongoing");
  const auto last = svc.user_turn(id, "hmm");
  EXPECT_EQ(last.at("turn"), kMaxTurns + 1);
  EXPECT_EQ(last.at("status"), "failed");
  EXPECT_EQ(last.at("record").at("agent"), "asker");
  EXPECT_THROW(svc.user_turn(id, "hmm"), SessionClosed);
  EXPECT_THROW(svc.close_session(id, "success"), SessionClosed);
}

TEST(EvalService, ErrorsAreTyped) {
  EvalService empty({}, kb(), Schema::full_domain());
  EXPECT_THROW(empty.open_session(), NoAgents);
  EvalService svc(pool_of({{"x", kBye}}), kb(), Schema::full_domain());
  EXPECT_THROW(svc.user_turn("s999", "hi"), NotFound);
  EXPECT_THROW(svc.session_view("nope"), NotFound);
  const auto id = svc.open_session().at("id").get<std::string>();
  EXPECT_THROW(svc.close_session(id, "great"), std::invalid_argument);
  svc.close_session(id, "abandon");
  EXPECT_THROW(svc.close_session(id, "abandon"), SessionClosed);
}

TEST(EvalService, EventLogIsAppendOnlyJsonLines) {
  const auto path = std::filesystem::temp_directory_path() / "d3q_service_log.jsonl";
  std::filesystem::remove(path);
  for (int round = 0; round < 2; ++round) {
    EvalService svc(pool_of({{"x", kAskDate}}), kb(), Schema::full_domain(), 1, path.string());
    const auto id = svc.open_session().at("id").get<std::string>();
    svc.user_turn(id, "two tickets please");
    svc.close_session(id, "abandon");
  }
  std::ifstream in(path);
  std::vector<std::string> events;
  for (std::string line; std::getline(in, line);)
    events.push_back(nlohmann::json::parse(line).at("event").get<std::string>());
  EXPECT_EQ(events, (std::vector<std::string>{"open", "turn", "close", "open", "turn", "close"}));
  std::filesystem::remove(path);
}

TEST(HttpApi, EndpointsAndStatusCodes) {
  EvalService svc(pool_of({{"x", kAskDate}}), kb(), Schema::full_domain());
  EvalService none({}, kb(), Schema::full_domain());
  httplib::Server server, server2;
  mount_service(server, svc);
  mount_service(server2, none);
  const int port = server.bind_to_any_port("127.0.0.1");
  const int port2 = server2.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  std::thread t2([&] { server2.listen_after_bind(); });
  server.wait_until_ready();
  server2.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto opened = cli.Post("/sessions", "", "application/json");
  ASSERT_TRUE(opened);
  EXPECT_EQ(opened->status, 200);
  const auto id = nlohmann::json::parse(opened->body).at("id").get<std::string>();

  auto turn = cli.Post("/sessions/" + id + "/turns", R"({"utterance": "hi, I want to see deadpool"})",
                       "application/json");
  ASSERT_TRUE(turn);
  EXPECT_EQ(turn->status, 200);
  EXPECT_EQ(nlohmann::json::parse(turn->body).at("user_frame").at("inform_slots").at("moviename"),
            "deadpool");

  EXPECT_EQ(cli.Post("/sessions/" + id + "/turns", "{oops", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/sessions/" + id + "/turns", R"({"text": "x"})", "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/sessions/nope/turns", R"({"utterance": "x"})", "application/json")->status, 404);
  EXPECT_EQ(cli.Get("/sessions/nope")->status, 404);
  EXPECT_EQ(cli.Post("/sessions/" + id + "/close", R"({"verdict": "meh"})", "application/json")->status, 400);

  auto view = cli.Get("/sessions/" + id);
  EXPECT_EQ(view->status, 200);
  EXPECT_FALSE(nlohmann::json::parse(view->body).contains("agent"));

  auto closed = cli.Post("/sessions/" + id + "/close", R"({"verdict": "abandon"})", "application/json");
  EXPECT_EQ(closed->status, 200);
  EXPECT_EQ(nlohmann::json::parse(closed->body).at("agent"), "x");
  EXPECT_EQ(cli.Post("/sessions/" + id + "/close", R"({"verdict": "abandon"})", "application/json")->status,
            409);
  EXPECT_EQ(cli.Post("/sessions/" + id + "/turns", R"({"utterance": "x"})", "application/json")->status, 409);

  auto results = cli.Get("/results");
  EXPECT_EQ(results->status, 200);
  EXPECT_EQ(nlohmann::json::parse(results->body).at("total"), 1);

  httplib::Client cli2("127.0.0.1", port2);
  EXPECT_EQ(cli2.Post("/sessions", "", "application/json")->status, 503);

  server.stop();
  server2.stop();
  t.join();
  t2.join();
}
