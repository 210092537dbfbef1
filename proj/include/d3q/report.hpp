#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "d3q/trainer.hpp"

namespace d3q {

inline constexpr const char* kCurveHeader = "epoch,agent,seed,success_rate,avg_reward,avg_turns";

inline std::string curve_row(const EvalResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%s,%llu,%.4f,%.4f,%.4f", r.epoch, r.agent.c_str(),
                static_cast<unsigned long long>(r.seed), r.success_rate, r.avg_reward,
                r.avg_turns);
  return buf;
}

// Appends rows to a curve file, writing the header first if the file is new
// or empty.
class CurveWriter {
 public:
  explicit CurveWriter(const std::string& path) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw FormatError("cannot write " + path);
    if (fresh) out_ << kCurveHeader << '\n';
  }

  void append(const EvalResult& r) { out_ << curve_row(r) << '\n' << std::flush; }

 private:
  std::ofstream out_;
};

inline std::vector<EvalResult> read_curves(std::istream& in) {
  std::vector<EvalResult> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (line != kCurveHeader) throw FormatError("unexpected curve header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw FormatError("bad curve row: " + line);
    EvalResult r;
    try {
      r.epoch = std::stoi(f[0]);
      r.agent = f[1];
      r.seed = std::stoull(f[2]);
      r.success_rate = std::stod(f[3]);
      r.avg_reward = std::stod(f[4]);
      r.avg_turns = std::stod(f[5]);
    } catch (const std::exception&) {
      throw FormatError("bad curve row: " + line);
    }
    out.push_back(r);
  }
  return out;
}

inline std::vector<EvalResult> read_curve_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_curves(in);
}

// All *.csv files under a directory, in path order.
inline std::vector<EvalResult> read_curve_dir(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<EvalResult> out;
  for (const auto& p : files) {
    auto part = read_curve_file(p.string());
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// One agent variant of an experiment.
struct AgentSpec {
  AgentKind agent = AgentKind::dqn;
  int k = 5;
  bool rand_init_world = false;
  bool fixed_world = false;
  bool fixed_discriminator = false;

  TrainConfig apply(TrainConfig base) const {
    base.agent = agent;
    base.k = k;
    base.rand_init_world = rand_init_world;
    base.fixed_world = fixed_world;
    base.fixed_discriminator = fixed_discriminator;
    return base;
  }

  std::string label() const { return apply({}).label(); }
};

struct Preset {
  std::string name;
  Domain domain = Domain::full;
  int epochs = 300;
  std::vector<AgentSpec> agents;
};

inline std::vector<std::string> preset_names() {
  return {"fig4_ddq_sweep", "fig5_full_domain", "fig6_d3q_sweep", "fig_de_extension", "table2"};
}

inline Preset make_preset(const std::string& name) {
  using enum AgentKind;
  Preset p;
  p.name = name;
  if (name == "fig4_ddq_sweep") {
    p.agents.push_back({dqn, 1});
    for (int k : {2, 3, 5, 10, 15}) p.agents.push_back({ddq, k});
  } else if (name == "fig5_full_domain") {
    p.agents = {{dqn, 1}, {ddq, 5}, {d3q, 5}};
  } else if (name == "fig6_d3q_sweep") {
    for (int k : {2, 3, 5, 10, 15}) p.agents.push_back({d3q, k});
  } else if (name == "fig_de_extension") {
    p.domain = Domain::extension;
    p.agents = {{dqn, 1}, {ddq, 5}, {d3q, 5}};
  } else if (name == "table2") {
    p.agents.push_back({dqn, 1});
    for (int k : {5, 10}) {
      p.agents.push_back({ddq, k});
      p.agents.push_back({ddq, k, true});
      p.agents.push_back({ddq, k, false, true});
      p.agents.push_back({d3q, k});
      p.agents.push_back({d3q, k, false, false, true});
      p.agents.push_back({dqn_k, k});
    }
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return p;
}

inline std::shared_ptr<const Environment> make_environment(Domain d,
                                                           KnowledgeBase kb = KnowledgeBase::synthetic()) {
  return d == Domain::extension ? Environment::domain_extension(std::move(kb))
                                : Environment::full_domain(std::move(kb));
}

inline std::string cell_file_name(const TrainConfig& cfg) {
  std::string name = cfg.label();
  for (char& c : name)
    if (c == '(' || c == ')' || c == '+') c = '_';
  return name + "_s" + std::to_string(cfg.seed) + ".csv";
}

// Runs every (agent, seed) cell of a preset. Each cell writes its own curve
// file under out_dir/<preset>/, so cells are independent.
inline std::vector<EvalResult> run_preset(const Preset& p, int seeds, const std::string& out_dir,
                                          const TrainConfig& base = {},
                                          const std::function<void(const EvalResult&)>& on_eval = {}) {
  const std::string dir = out_dir + "/" + p.name;
  std::filesystem::create_directories(dir);
  std::vector<EvalResult> all;
  for (const auto& spec : p.agents) {
    auto env = make_environment(p.domain);
    for (int s = 1; s <= seeds; ++s) {
      TrainConfig cfg = spec.apply(base);
      cfg.domain = p.domain;
      cfg.epochs = base.epochs > 0 ? base.epochs : p.epochs;
      cfg.seed = static_cast<std::uint64_t>(s);
      const std::string path = dir + "/" + cell_file_name(cfg);
      std::filesystem::remove(path);
      CurveWriter writer(path);
      Trainer t(cfg, env);
      t.run({}, [&](const EvalResult& r) {
        writer.append(r);
        all.push_back(r);
        if (on_eval) on_eval(r);
      });
    }
  }
  return all;
}

struct SummaryCell {
  int runs = 0;
  double success = 0.0, success_sd = 0.0;
  double reward = 0.0, turns = 0.0;
};

struct SummaryRow {
  std::string agent;
  std::map<int, SummaryCell> at;  // keyed by epoch
};

// Mean over seeds at each requested epoch; agents keep first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<EvalResult>& curves,
                                         const std::vector<int>& epochs = {100, 200, 300}) {
  std::vector<SummaryRow> rows;
  auto row_for = [&rows](const std::string& agent) -> SummaryRow& {
    for (auto& r : rows)
      if (r.agent == agent) return r;
    rows.push_back({agent, {}});
    return rows.back();
  };
  std::map<std::pair<std::string, int>, std::vector<const EvalResult*>> cells;
  for (const auto& r : curves) {
    row_for(r.agent);
    if (std::find(epochs.begin(), epochs.end(), r.epoch) != epochs.end())
      cells[{r.agent, r.epoch}].push_back(&r);
  }
  for (auto& row : rows) {
    for (int e : epochs) {
      auto it = cells.find({row.agent, e});
      if (it == cells.end()) continue;
      SummaryCell c;
      c.runs = static_cast<int>(it->second.size());
      for (const auto* r : it->second) {
        c.success += r->success_rate / c.runs;
        c.reward += r->avg_reward / c.runs;
        c.turns += r->avg_turns / c.runs;
      }
      double var = 0.0;
      for (const auto* r : it->second) var += std::pow(r->success_rate - c.success, 2) / c.runs;
      c.success_sd = std::sqrt(var);
      row.at[e] = c;
    }
  }
  return rows;
}

inline std::string render_table(const std::vector<SummaryRow>& rows,
                                const std::vector<int>& epochs = {100, 200, 300}) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.agent.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "Agent";
  for (int e : epochs) os << " | epoch " << std::setw(21) << e;
  os << '\n' << std::setw(static_cast<int>(width)) << "";
  for (std::size_t i = 0; i < epochs.size(); ++i)
    os << " | " << std::right << std::setw(7) << "Success" << std::setw(8) << "Reward"
       << std::setw(7) << "Turns" << std::left;
  os << '\n' << std::string(width + epochs.size() * 25, '-') << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.agent << std::right << std::fixed;
    for (int e : epochs) {
      auto it = r.at.find(e);
      if (it == r.at.end()) {
        os << " | " << std::setw(22) << "-";
        continue;
      }
      os << " | " << std::setprecision(4) << std::setw(7) << it->second.success
         << std::setprecision(2) << std::setw(8) << it->second.reward << std::setw(7)
         << it->second.turns;
    }
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json summary_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& [e, c] : r.at)
      cells[std::to_string(e)] = {{"runs", c.runs},
                                  {"success_rate", c.success},
                                  {"success_sd", c.success_sd},
                                  {"avg_reward", c.reward},
                                  {"avg_turns", c.turns}};
    out.push_back({{"agent", r.agent}, {"epochs", cells}});
  }
  return out;
}

}  // namespace d3q
