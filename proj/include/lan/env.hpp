#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lan/errors.hpp"

namespace lan {

// Static description of a Dec-POMDP environment: agent count, per-agent
// action set sizes (they may differ), observation/state encoding widths,
// discount and episode limit. Observations are deterministic functions of
// the state.
struct EnvInfo {
  std::string name;
  int n_agents = 0;
  std::vector<int> n_actions;
  int obs_dim = 0;
  int state_dim = 0;
  double gamma = 0.99;
  int t_max = 1;

  int max_actions() const {
    int m = 0;
    for (int a : n_actions) m = std::max(m, a);
    return m;
  }
};

struct ResetResult {
  std::vector<std::vector<double>> obs;  // one vector per agent
  std::vector<double> state;             // true state encoding
};

struct StepResult {
  double reward = 0;                     // single team reward
  std::vector<std::vector<double>> obs;  // next observations
  std::vector<double> state;             // next true state encoding
  bool terminal = false;                 // environment-terminal
  bool truncated = false;                // time-limit cut, distinct from terminal
  bool won = false;                      // valid when terminal
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvInfo& info() const = 0;
  virtual ResetResult reset(std::uint64_t seed) = 0;
  virtual StepResult step(const std::vector<int>& joint_action) = 0;
  // Fixed-length encoding of the current true state.
  virtual std::vector<double> true_state() const = 0;
  // Fresh instance of the same environment (for evaluation workers).
  virtual std::unique_ptr<Env> clone_fresh() const = 0;

 protected:
  void check_actions(const std::vector<int>& joint, bool episode_over) const {
    const EnvInfo& inf = info();
    if (episode_over) throw ContractError(inf.name + ": step() after terminal state");
    if (static_cast<int>(joint.size()) != inf.n_agents)
      throw ContractError(inf.name + ": joint action must have one entry per agent");
    for (int a = 0; a < inf.n_agents; ++a)
      if (joint[a] < 0 || joint[a] >= inf.n_actions[a])
        throw ContractError(inf.name + ": action " + std::to_string(joint[a]) + " out of range for agent " +
                            std::to_string(a));
  }
};

inline std::vector<double> one_hot(int index, int size) {
  std::vector<double> v(size, 0.0);
  if (index >= 0 && index < size) v[index] = 1.0;
  return v;
}

}  // namespace lan
