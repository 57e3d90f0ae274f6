#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lan/errors.hpp"

namespace lan {

// Flat key = value training configuration. Defaults follow the training
// protocol used throughout: buffer of 5000 episodes, batches of 32, two
// optimizer passes per episode, Adam at 5e-4, target sync every 100
// episodes, gradient norm clipped to 10, epsilon from 1.0 to 0.05.
struct TrainConfig {
  std::string algorithm = "lan";  // lan | lan_mean | iql | vdn
  std::string env;
  long total_steps = 50000;
  long buffer_capacity = 5000;
  int batch_size = 32;
  int updates_per_episode = 2;
  double learning_rate = 5e-4;
  long target_sync_episodes = 100;
  double grad_clip_norm = 10.0;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_anneal_steps = 0;  // 0: total_steps / 10
  long eval_period_steps = 0;     // 0: max(500, total_steps / 50)
  int eval_episodes = 32;
  double gamma = -1.0;  // negative: use the fixture's discount
  std::string precision = "f32";  // f32 | f64 (LAN_PRECISION overrides)
  bool mean_constraint = false;   // implied by algorithm = lan_mean
  bool stop_grad_value_h = false;
  bool double_batch_updates = true;  // two independently sampled batches
  bool check_decentralization = false;
  bool check_zero_mean = false;
  std::string scripted_agents;    // e.g. "1:seq:0,2,1,2,0" or "0:fixed:2;2:fixed:1"
  int stop_on_eval_success = 0;   // consecutive perfect evals that end the run early
  std::vector<long> seeds;        // used by sweep when no --seeds given

  long anneal_steps() const { return epsilon_anneal_steps > 0 ? epsilon_anneal_steps : total_steps / 10; }
  long eval_period() const {
    return eval_period_steps > 0 ? eval_period_steps : std::max<long>(500, total_steps / 50);
  }

  std::map<int, std::string> scripted_agent_map() const {
    std::map<int, std::string> out;
    if (scripted_agents.empty()) return out;
    std::stringstream ss(scripted_agents);
    std::string part;
    while (std::getline(ss, part, ';')) {
      auto colon = part.find(':');
      if (colon == std::string::npos) throw ParseError("scripted_agents: expected '<agent>:<script>'");
      out[std::stoi(part.substr(0, colon))] = part.substr(colon + 1);
    }
    return out;
  }

  void validate() const {
    if (algorithm != "lan" && algorithm != "lan_mean" && algorithm != "iql" && algorithm != "vdn")
      throw ParseError("config: unknown algorithm '" + algorithm + "'");
    if (env.empty()) throw ParseError("config: env is required");
    if (total_steps <= 0) throw ParseError("config: total_steps must be positive");
    if (buffer_capacity <= 0 || batch_size <= 0) throw ParseError("config: buffer and batch must be positive");
    if (updates_per_episode < 0) throw ParseError("config: updates_per_episode must be >= 0");
    if (!(learning_rate > 0)) throw ParseError("config: learning_rate must be positive");
    if (target_sync_episodes <= 0) throw ParseError("config: target_sync_episodes must be positive");
    if (!(grad_clip_norm > 0)) throw ParseError("config: grad_clip_norm must be positive");
    if (epsilon_end > epsilon_start) throw ParseError("config: epsilon_end must be <= epsilon_start");
    if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0)
      throw ParseError("config: epsilon out of [0,1]");
    if (eval_episodes <= 0) throw ParseError("config: eval_episodes must be positive");
    if (gamma >= 1.0) throw ParseError("config: gamma must be < 1");
    if (precision != "f32" && precision != "f64") throw ParseError("config: precision must be f32 or f64");
    scripted_agent_map();  // syntax check
  }

  // Canonical text: every field in fixed order, one per line. Used for the
  // config hash embedded in checkpoints.
  std::string canonical_text() const {
    std::ostringstream out;
    out << "algorithm = " << algorithm << "\n";
    out << "env = " << env << "\n";
    out << "total_steps = " << total_steps << "\n";
    out << "buffer_capacity = " << buffer_capacity << "\n";
    out << "batch_size = " << batch_size << "\n";
    out << "updates_per_episode = " << updates_per_episode << "\n";
    out << "learning_rate = " << format_double(learning_rate) << "\n";
    out << "target_sync_episodes = " << target_sync_episodes << "\n";
    out << "grad_clip_norm = " << format_double(grad_clip_norm) << "\n";
    out << "epsilon_start = " << format_double(epsilon_start) << "\n";
    out << "epsilon_end = " << format_double(epsilon_end) << "\n";
    out << "epsilon_anneal_steps = " << epsilon_anneal_steps << "\n";
    out << "eval_period_steps = " << eval_period_steps << "\n";
    out << "eval_episodes = " << eval_episodes << "\n";
    out << "gamma = " << format_double(gamma) << "\n";
    out << "precision = " << precision << "\n";
    out << "mean_constraint = " << (mean_constraint ? "true" : "false") << "\n";
    out << "stop_grad_value_h = " << (stop_grad_value_h ? "true" : "false") << "\n";
    out << "double_batch_updates = " << (double_batch_updates ? "true" : "false") << "\n";
    out << "check_decentralization = " << (check_decentralization ? "true" : "false") << "\n";
    out << "check_zero_mean = " << (check_zero_mean ? "true" : "false") << "\n";
    out << "scripted_agents = " << scripted_agents << "\n";
    out << "stop_on_eval_success = " << stop_on_eval_success << "\n";
    out << "seeds = " << seeds_text() << "\n";
    return out.str();
  }

  std::string seeds_text() const {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(seeds[i]);
    }
    return s;
  }

  static std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
  }
};

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const TrainConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.canonical_text())));
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    long out = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ParseError("config: bad integer for '" + key + "': " + v);
  }
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ParseError("config: bad number for '" + key + "': " + v);
  }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config: bad boolean for '" + key + "': " + v);
}

}  // namespace detail

inline TrainConfig parse_config_text(const std::string& text) {
  TrainConfig c;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = detail::trim(stripped.substr(0, eq));
    std::string value = detail::trim(stripped.substr(eq + 1));
    if (key == "algorithm") c.algorithm = value;
    else if (key == "env") c.env = value;
    else if (key == "total_steps") c.total_steps = detail::parse_long(value, key);
    else if (key == "buffer_capacity") c.buffer_capacity = detail::parse_long(value, key);
    else if (key == "batch_size") c.batch_size = static_cast<int>(detail::parse_long(value, key));
    else if (key == "updates_per_episode") c.updates_per_episode = static_cast<int>(detail::parse_long(value, key));
    else if (key == "learning_rate") c.learning_rate = detail::parse_double(value, key);
    else if (key == "target_sync_episodes") c.target_sync_episodes = detail::parse_long(value, key);
    else if (key == "grad_clip_norm") c.grad_clip_norm = detail::parse_double(value, key);
    else if (key == "epsilon_start") c.epsilon_start = detail::parse_double(value, key);
    else if (key == "epsilon_end") c.epsilon_end = detail::parse_double(value, key);
    else if (key == "epsilon_anneal_steps") c.epsilon_anneal_steps = detail::parse_long(value, key);
    else if (key == "eval_period_steps") c.eval_period_steps = detail::parse_long(value, key);
    else if (key == "eval_episodes") c.eval_episodes = static_cast<int>(detail::parse_long(value, key));
    else if (key == "gamma") c.gamma = detail::parse_double(value, key);
    else if (key == "precision") c.precision = value;
    else if (key == "mean_constraint") c.mean_constraint = detail::parse_bool(value, key);
    else if (key == "stop_grad_value_h") c.stop_grad_value_h = detail::parse_bool(value, key);
    else if (key == "double_batch_updates") c.double_batch_updates = detail::parse_bool(value, key);
    else if (key == "check_decentralization") c.check_decentralization = detail::parse_bool(value, key);
    else if (key == "check_zero_mean") c.check_zero_mean = detail::parse_bool(value, key);
    else if (key == "scripted_agents") c.scripted_agents = value;
    else if (key == "stop_on_eval_success") c.stop_on_eval_success = static_cast<int>(detail::parse_long(value, key));
    else if (key == "seeds") {
      c.seeds.clear();
      if (!value.empty()) {
        std::stringstream vs(value);
        std::string tok;
        while (std::getline(vs, tok, ',')) c.seeds.push_back(detail::parse_long(detail::trim(tok), "seeds"));
      }
    } else {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (c.algorithm == "lan_mean") c.mean_constraint = true;
  if (const char* p = std::getenv("LAN_PRECISION")) c.precision = p;
  c.validate();
  return c;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace lan
