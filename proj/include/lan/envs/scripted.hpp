#pragma once

#include <map>
#include <sstream>
#include <vector>

#include "lan/env.hpp"

namespace lan {

// Scripted policy for a frozen co-player: either a constant action or a
// looping action sequence indexed by the timestep. Parsed from strings of
// the form "fixed:2" or "seq:0,2,1,2,0".
struct Script {
  std::vector<int> sequence;

  int action_at(int t) const { return sequence[t % sequence.size()]; }

  static Script parse(const std::string& text) {
    Script s;
    auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("script: expected 'fixed:<a>' or 'seq:<a,b,...>', got '" + text + "'");
    std::string kind = text.substr(0, colon);
    std::string body = text.substr(colon + 1);
    if (kind == "fixed") {
      s.sequence = {std::stoi(body)};
    } else if (kind == "seq") {
      std::stringstream ss(body);
      std::string tok;
      while (std::getline(ss, tok, ',')) s.sequence.push_back(std::stoi(tok));
      if (s.sequence.empty()) throw ParseError("script: empty sequence");
    } else {
      throw ParseError("script: unknown kind '" + kind + "'");
    }
    return s;
  }
};

// Folds scripted co-players into the environment: the wrapped env exposes
// only the learning agents, and supplies the scripted agents' actions
// internally. From the learner's point of view the scripted players are part
// of the environment dynamics.
class ScriptedWrapperEnv : public Env {
 public:
  ScriptedWrapperEnv(std::unique_ptr<Env> inner, std::map<int, Script> scripts)
      : inner_(std::move(inner)), scripts_(std::move(scripts)) {
    const EnvInfo& base = inner_->info();
    for (auto& [agent, script] : scripts_) {
      if (agent < 0 || agent >= base.n_agents) throw ContractError("scripted agent index out of range");
      for (int act : script.sequence)
        if (act < 0 || act >= base.n_actions[agent])
          throw ContractError("scripted action out of range for agent " + std::to_string(agent));
    }
    info_ = base;
    info_.name = base.name + "+scripted";
    info_.n_agents = 0;
    info_.n_actions.clear();
    for (int a = 0; a < base.n_agents; ++a) {
      if (scripts_.count(a)) continue;
      learners_.push_back(a);
      info_.n_actions.push_back(base.n_actions[a]);
      ++info_.n_agents;
    }
    if (info_.n_agents == 0) throw ContractError("scripted wrapper: no learning agents left");
  }

  const EnvInfo& info() const override { return info_; }

  ResetResult reset(std::uint64_t seed) override {
    t_ = 0;
    ResetResult r = inner_->reset(seed);
    return ResetResult{select(r.obs), std::move(r.state)};
  }

  StepResult step(const std::vector<int>& joint) override {
    if (static_cast<int>(joint.size()) != info_.n_agents)
      throw ContractError("scripted wrapper: joint action size mismatch");
    std::vector<int> full(inner_->info().n_agents, 0);
    for (std::size_t i = 0; i < learners_.size(); ++i) full[learners_[i]] = joint[i];
    for (auto& [agent, script] : scripts_) full[agent] = script.action_at(t_);
    ++t_;
    StepResult r = inner_->step(full);
    r.obs = select(r.obs);
    return r;
  }

  std::vector<double> true_state() const override { return inner_->true_state(); }

  std::unique_ptr<Env> clone_fresh() const override {
    return std::make_unique<ScriptedWrapperEnv>(inner_->clone_fresh(), scripts_);
  }

  const std::vector<int>& learner_indices() const { return learners_; }

 private:
  std::vector<std::vector<double>> select(const std::vector<std::vector<double>>& obs) const {
    std::vector<std::vector<double>> out;
    out.reserve(learners_.size());
    for (int a : learners_) out.push_back(obs[a]);
    return out;
  }

  std::unique_ptr<Env> inner_;
  std::map<int, Script> scripts_;
  std::vector<int> learners_;
  EnvInfo info_;
  int t_ = 0;
};

}  // namespace lan
