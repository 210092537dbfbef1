// d3q command-line front end: training, evaluation, experiment presets,
// reports, the human-evaluation server and data dumps.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <random>

#include "CLI11.hpp"

#include "d3q/config.hpp"
#include "d3q/report.hpp"
#include "d3q/server.hpp"

using namespace d3q;

namespace {

KnowledgeBase load_kb(const std::string& path) {
  return path.empty() ? KnowledgeBase::synthetic() : KnowledgeBase::load_file(path);
}

std::shared_ptr<QAgent> load_agent(const std::string& path) {
  QAgentConfig qc;
  qc.state_dim = kStateDim;
  qc.num_actions = num_agent_actions();
  std::mt19937_64 rng(0);
  auto agent = std::make_shared<QAgent>(qc, rng);
  agent->load(path);
  return agent;
}

void print_epoch(const EpochStats& st) {
  std::printf("epoch %3d  real %2d/%2d", st.epoch + 1, st.real_successes, st.real_dialogues);
  if (st.planning_attempts)
    std::printf("  planned %3d accepted %3d fallback %3d  D(real) %.3f D(sim) %.3f", st.planning_attempts,
                st.accepted_sessions, st.fallback_sessions, st.real_score, st.mean_score);
  std::printf("  loss q %.4f g %.4f d %.4f\n", st.dqn_loss, st.world_loss, st.disc_loss);
}

struct TrainArgs {
  std::string config, agent, domain, out, kb, checkpoint_dir;
  int k = -1, epochs = -1, eval_every = -1;
  std::uint64_t seed = 0;
  bool fixed_world = false, rand_init_world = false, fixed_discriminator = false, verbose = false;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_config(a.config);
  if (!a.agent.empty()) set_option(cfg, "agent", a.agent);
  if (!a.domain.empty()) set_option(cfg, "domain", a.domain);
  if (a.k > 0) cfg.k = a.k;
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  if (a.seed > 0) cfg.seed = a.seed;
  if (a.eval_every > 0) cfg.eval_every = a.eval_every;
  if (!a.checkpoint_dir.empty()) cfg.checkpoint_dir = a.checkpoint_dir;
  cfg.fixed_world = cfg.fixed_world || a.fixed_world;
  cfg.rand_init_world = cfg.rand_init_world || a.rand_init_world;
  cfg.fixed_discriminator = cfg.fixed_discriminator || a.fixed_discriminator;
  cfg.validate();

  auto env = make_environment(cfg.domain, load_kb(a.kb));
  Trainer trainer(cfg, env);
  std::unique_ptr<CurveWriter> writer;
  if (!a.out.empty()) {
    std::filesystem::remove(a.out);
    writer = std::make_unique<CurveWriter>(a.out);
  }
  std::printf("training %s seed %llu for %d epochs (%s domain)\n", cfg.label().c_str(),
              static_cast<unsigned long long>(cfg.seed), cfg.epochs, to_string(cfg.domain).c_str());
  int caps = 0;
  trainer.run(
      [&](const EpochStats& st) {
        caps += st.attempt_cap_warning ? 1 : 0;
        if (a.verbose) print_epoch(st);
      },
      [&](const EvalResult& r) {
        if (writer) writer->append(r);
        std::printf("eval epoch %3d  success %.3f  reward %7.2f  turns %5.2f\n", r.epoch,
                    r.success_rate, r.avg_reward, r.avg_turns);
      });
  if (caps) std::printf("attempt cap reached in %d epochs\n", caps);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d3q: discriminator-gated Deep Dyna-Q for movie-ticket dialogue policies"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train one agent and write its learning curve");
  train->add_option("--config", ta.config, "key = value file; flags override it");
  train->add_option("--agent", ta.agent, "dqn, dqnk, ddq or d3q");
  train->add_option("--k", ta.k, "planning multiplier K");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--seed", ta.seed);
  train->add_option("--domain", ta.domain, "full or extension");
  train->add_flag("--fixed-world", ta.fixed_world, "pre-train G once, never update it");
  train->add_flag("--rand-init-world", ta.rand_init_world, "skip pre-training of G");
  train->add_flag("--fixed-discriminator", ta.fixed_discriminator, "never update D");
  train->add_option("--eval-every", ta.eval_every);
  train->add_option("--out", ta.out, "learning-curve CSV");
  train->add_option("--checkpoint-dir", ta.checkpoint_dir);
  train->add_option("--kb", ta.kb, "movie table (TSV); default is the bundled one");
  train->add_flag("-v,--verbose", ta.verbose, "print per-epoch statistics");

  std::string ev_ckpt, ev_kb, ev_transcripts, ev_domain = "full";
  int ev_n = 50, ev_epoch = 0;
  std::uint64_t ev_seed = 1;
  bool ev_rule = false;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint");
  auto* ckpt_opt = evaluate_cmd->add_option("--checkpoint", ev_ckpt, "Q-network checkpoint");
  evaluate_cmd->add_flag("--rule", ev_rule, "evaluate the rule agent instead")->excludes(ckpt_opt);
  evaluate_cmd->add_option("--n", ev_n, "number of dialogues");
  evaluate_cmd->add_option("--seed", ev_seed);
  evaluate_cmd->add_option("--epoch", ev_epoch, "schema stage (extension domain)");
  evaluate_cmd->add_option("--domain", ev_domain);
  evaluate_cmd->add_option("--kb", ev_kb);
  evaluate_cmd->add_option("--transcripts", ev_transcripts, "JSON-lines transcript log");

  std::string pr_name, pr_out = "runs";
  int pr_seeds = 3, pr_epochs = 0;
  auto* preset_cmd = app.add_subcommand("preset", "run an experiment preset");
  preset_cmd->add_option("name", pr_name)->required()->check(CLI::IsMember(preset_names()));
  preset_cmd->add_option("--seeds", pr_seeds);
  preset_cmd->add_option("--epochs", pr_epochs, "override the preset's epoch count");
  preset_cmd->add_option("--out", pr_out, "output directory");

  std::string rp_in, rp_text, rp_json;
  std::vector<int> rp_epochs{100, 200, 300};
  auto* report_cmd = app.add_subcommand("report", "summary table from curve files");
  report_cmd->add_option("curves", rp_in, "curve CSV or directory of them")->required();
  report_cmd->add_option("--epochs", rp_epochs)->delimiter(',');
  report_cmd->add_option("--text", rp_text, "write the aligned table here");
  report_cmd->add_option("--json", rp_json, "write the structured summary here");

  std::vector<std::string> sv_agents;
  std::string sv_host = "127.0.0.1", sv_log, sv_kb;
  int sv_port = 8080;
  std::uint64_t sv_seed = 1;
  auto* serve_cmd = app.add_subcommand("serve", "human-evaluation HTTP service");
  serve_cmd->add_option("--agent", sv_agents, "label=checkpoint, repeatable")->required();
  serve_cmd->add_option("--host", sv_host);
  serve_cmd->add_option("--port", sv_port);
  serve_cmd->add_option("--log", sv_log, "append-only event log (JSON lines)");
  serve_cmd->add_option("--seed", sv_seed);
  serve_cmd->add_option("--kb", sv_kb);

  std::string kb_out;
  auto* kb_cmd = app.add_subcommand("kb", "write the bundled movie table as TSV");
  kb_cmd->add_option("out", kb_out)->required();

  std::string goals_out, goals_kb;
  int goals_n = 1000;
  std::uint64_t goals_seed = 1;
  auto* goals_cmd = app.add_subcommand("goals", "sample a user-goal file (JSON lines)");
  goals_cmd->add_option("out", goals_out)->required();
  goals_cmd->add_option("--n", goals_n);
  goals_cmd->add_option("--seed", goals_seed);
  goals_cmd->add_option("--kb", goals_kb);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(ta);

    if (*evaluate_cmd) {
      if (!ev_rule && ev_ckpt.empty()) throw CLI::RequiredError("--checkpoint or --rule");
      auto env = make_environment(parse_domain(ev_domain), load_kb(ev_kb));
      const Schema schema = env->schema_at(ev_epoch);
      std::shared_ptr<QAgent> agent;
      Policy policy = rule_policy();
      if (!ev_rule) {
        agent = load_agent(ev_ckpt);
        const auto mask = agent_action_mask(schema);
        policy = [agent, mask](const TrackerState&, const Eigen::VectorXd& s) {
          return agent->greedy_action(s, mask);
        };
      }
      std::mt19937_64 rng(ev_seed);
      std::vector<Episode> episodes;
      EvalResult r = evaluate(policy, *env, schema, ev_n, rng,
                              ev_transcripts.empty() ? nullptr : &episodes);
      r.agent = ev_rule ? "rule" : ev_ckpt;
      r.seed = ev_seed;
      r.epoch = ev_epoch;
      if (!ev_transcripts.empty()) {
        std::ofstream out(ev_transcripts);
        for (const auto& ep : episodes) out << transcript_json(ep).dump() << '\n';
      }
      std::cout << to_json(r).dump(2) << '\n';
      return 0;
    }

    if (*preset_cmd) {
      TrainConfig base;
      base.epochs = pr_epochs;
      run_preset(make_preset(pr_name), pr_seeds, pr_out, base, [](const EvalResult& r) {
        std::printf("%s seed %llu epoch %d success %.3f\n", r.agent.c_str(),
                    static_cast<unsigned long long>(r.seed), r.epoch, r.success_rate);
      });
      const auto rows = summarize(read_curve_dir(pr_out + "/" + pr_name));
      const std::string table = render_table(rows);
      std::cout << table;
      std::ofstream(pr_out + "/" + pr_name + "/summary.txt") << table;
      std::ofstream(pr_out + "/" + pr_name + "/summary.json") << summary_json(rows).dump(2) << '\n';
      return 0;
    }

    if (*report_cmd) {
      const auto curves = std::filesystem::is_directory(rp_in) ? read_curve_dir(rp_in)
                                                               : read_curve_file(rp_in);
      const auto rows = summarize(curves, rp_epochs);
      const std::string table = render_table(rows, rp_epochs);
      std::cout << table;
      if (!rp_text.empty()) std::ofstream(rp_text) << table;
      if (!rp_json.empty()) std::ofstream(rp_json) << summary_json(rows).dump(2) << '\n';
      return 0;
    }

    if (*serve_cmd) {
      std::vector<AgentSnapshot> pool;
      for (const auto& spec : sv_agents) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--agent", "expected label=path");
        pool.push_back({spec.substr(0, eq), load_agent(spec.substr(eq + 1))});
      }
      EvalService svc(std::move(pool), load_kb(sv_kb), Schema::full_domain(), sv_seed, sv_log);
      httplib::Server server;
      mount_service(server, svc);
      std::printf("serving %zu agents on http://%s:%d\n", svc.pool_size(), sv_host.c_str(), sv_port);
      return server.listen(sv_host, sv_port) ? 0 : 1;
    }

    if (*kb_cmd) {
      KnowledgeBase::synthetic().save_file(kb_out);
      return 0;
    }

    if (*goals_cmd) {
      const KnowledgeBase kb = load_kb(goals_kb);
      std::mt19937_64 rng(goals_seed);
      std::vector<UserGoal> goals;
      for (int i = 0; i < goals_n; ++i)
        goals.push_back(sample_user_goal(rng, kb, Schema::full_domain()));
      save_goals(goals_out, goals);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
