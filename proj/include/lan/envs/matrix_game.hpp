#pragma once

#include <vector>

#include "lan/env.hpp"

namespace lan {

// Two-player shared-reward matrix game, played once or repeated for a fixed
// horizon. In the repeated variant each observation carries the last joint
// action so recurrent learners can condition on it.
struct MatrixGameSpec {
  std::string name = "matrix";
  std::vector<std::vector<double>> payoff;  // [action0][action1]
  int horizon = 1;
  double gamma = 0.9;
  bool append_last_joint_action = false;

  int rows() const { return static_cast<int>(payoff.size()); }
  int cols() const { return static_cast<int>(payoff[0].size()); }

  double max_payoff() const {
    double best = payoff[0][0];
    for (const auto& row : payoff)
      for (double v : row) best = std::max(best, v);
    return best;
  }
};

class MatrixGameEnv : public Env {
 public:
  explicit MatrixGameEnv(MatrixGameSpec spec) : spec_(std::move(spec)) {
    if (spec_.payoff.empty() || spec_.payoff[0].empty()) throw ParseError("matrix game: empty payoff matrix");
    for (const auto& row : spec_.payoff)
      if (static_cast<int>(row.size()) != spec_.cols()) throw ParseError("matrix game: ragged payoff matrix");
    info_.name = spec_.name;
    info_.n_agents = 2;
    info_.n_actions = {spec_.rows(), spec_.cols()};
    info_.obs_dim = 1 + (spec_.append_last_joint_action ? spec_.rows() + spec_.cols() : 0);
    info_.state_dim = 1 + (spec_.horizon > 1 ? spec_.rows() * spec_.cols() : 0);
    info_.gamma = spec_.gamma;
    info_.t_max = spec_.horizon;
  }

  const EnvInfo& info() const override { return info_; }

  ResetResult reset(std::uint64_t) override {
    t_ = 0;
    last_joint_ = {-1, -1};
    over_ = false;
    all_optimal_ = true;
    return ResetResult{observations(), true_state()};
  }

  StepResult step(const std::vector<int>& joint) override {
    check_actions(joint, over_);
    double r = spec_.payoff[joint[0]][joint[1]];
    if (r < spec_.max_payoff()) all_optimal_ = false;
    last_joint_ = joint;
    ++t_;
    StepResult out;
    out.reward = r;
    out.terminal = (t_ >= spec_.horizon);
    out.truncated = false;  // the horizon is part of the game, not a time limit
    over_ = out.terminal;
    out.won = out.terminal && all_optimal_;
    out.obs = observations();
    out.state = true_state();
    return out;
  }

  std::vector<double> true_state() const override {
    std::vector<double> s;
    s.push_back(spec_.horizon > 1 ? static_cast<double>(t_) / spec_.horizon : 1.0);
    if (spec_.horizon > 1) {
      std::vector<double> joint(spec_.rows() * spec_.cols(), 0.0);
      if (last_joint_[0] >= 0) joint[last_joint_[0] * spec_.cols() + last_joint_[1]] = 1.0;
      s.insert(s.end(), joint.begin(), joint.end());
    }
    return s;
  }

  std::unique_ptr<Env> clone_fresh() const override { return std::make_unique<MatrixGameEnv>(spec_); }

  const MatrixGameSpec& spec() const { return spec_; }

 private:
  std::vector<std::vector<double>> observations() const {
    std::vector<double> o{1.0};
    if (spec_.append_last_joint_action) {
      std::vector<double> a0 = one_hot(last_joint_[0], spec_.rows());
      std::vector<double> a1 = one_hot(last_joint_[1], spec_.cols());
      o.insert(o.end(), a0.begin(), a0.end());
      o.insert(o.end(), a1.begin(), a1.end());
    }
    return {o, o};  // both agents see the same signal
  }

  MatrixGameSpec spec_;
  EnvInfo info_;
  int t_ = 0;
  std::vector<int> last_joint_{-1, -1};
  bool over_ = true;
  bool all_optimal_ = true;
};

}  // namespace lan
