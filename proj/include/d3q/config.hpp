#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "d3q/trainer.hpp"

namespace d3q {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw FormatError(key + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail

inline Domain parse_domain(const std::string& s) {
  if (s == "full") return Domain::full;
  if (s == "extension") return Domain::extension;
  throw FormatError("unknown domain: " + s);
}

inline std::string to_string(Domain d) { return d == Domain::extension ? "extension" : "full"; }

// Sets one training option by name. Names match the long CLI flags with
// dashes turned into underscores.
inline void set_option(TrainConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "agent") {
      auto a = parse_agent_kind(value);
      if (!a) throw FormatError("unknown agent: " + value);
      cfg.agent = *a;
    } else if (key == "k") {
      cfg.k = std::stoi(value);
    } else if (key == "epochs") {
      cfg.epochs = std::stoi(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "domain") {
      cfg.domain = parse_domain(value);
    } else if (key == "fixed_world") {
      cfg.fixed_world = detail::parse_bool(key, value);
    } else if (key == "rand_init_world") {
      cfg.rand_init_world = detail::parse_bool(key, value);
    } else if (key == "fixed_discriminator") {
      cfg.fixed_discriminator = detail::parse_bool(key, value);
    } else if (key == "eval_every") {
      cfg.eval_every = std::stoi(value);
    } else if (key == "eval_dialogues") {
      cfg.eval_dialogues = std::stoi(value);
    } else if (key == "checkpoint_every") {
      cfg.checkpoint_every = std::stoi(value);
    } else if (key == "checkpoint_dir") {
      cfg.checkpoint_dir = value;
    } else if (key == "epsilon") {
      cfg.epsilon = std::stod(value);
    } else if (key == "gamma") {
      cfg.gamma = std::stod(value);
    } else if (key == "learning_rate") {
      cfg.optimizer.learning_rate = std::stod(value);
    } else if (key == "batch_size") {
      cfg.batch_size = std::stoi(value);
    } else {
      throw FormatError("unknown option: " + key);
    }
  } catch (const std::logic_error&) {
    throw FormatError(key + ": bad value '" + value + "'");
  }
}

// key = value per line; '#' starts a comment.
inline TrainConfig parse_config(std::istream& in, TrainConfig cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    set_option(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline TrainConfig load_config(const std::string& path, TrainConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return parse_config(in, std::move(cfg));
}

inline std::string dump_config(const TrainConfig& cfg) {
  std::ostringstream os;
  os << "agent = " << to_string(cfg.agent) << '\n'
     << "k = " << cfg.k << '\n'
     << "epochs = " << cfg.epochs << '\n'
     << "seed = " << cfg.seed << '\n'
     << "domain = " << to_string(cfg.domain) << '\n'
     << "fixed_world = " << (cfg.fixed_world ? "true" : "false") << '\n'
     << "rand_init_world = " << (cfg.rand_init_world ? "true" : "false") << '\n'
     << "fixed_discriminator = " << (cfg.fixed_discriminator ? "true" : "false") << '\n'
     << "eval_every = " << cfg.eval_every << '\n'
     << "eval_dialogues = " << cfg.eval_dialogues << '\n'
     << "checkpoint_every = " << cfg.checkpoint_every << '\n'
     << "checkpoint_dir = " << cfg.checkpoint_dir << '\n'
     << "epsilon = " << cfg.epsilon << '\n'
     << "gamma = " << cfg.gamma << '\n'
     << "learning_rate = " << cfg.optimizer.learning_rate << '\n'
     << "batch_size = " << cfg.batch_size << '\n';
  return os.str();
}

}  // namespace d3q
