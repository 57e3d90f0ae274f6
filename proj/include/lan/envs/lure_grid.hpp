#pragma once

#include <algorithm>
#include <cstdlib>
#include <vector>

#include "lan/env.hpp"
#include "lan/rng.hpp"

namespace lan {

// Partially observable gridworld with scripted enemies. Learning agents must
// bring at least `min_dockers` of their team to the goal cell; enemies chase
// the nearest visible agent and otherwise hold their attack points. An agent
// that ends a step next to an enemy is removed. Reaching the goal docks the
// agent immediately, out of the enemies' reach.
struct LureGridSpec {
  std::string name = "lure_grid";
  int height = 7, width = 7;
  int t_max = 40;
  double gamma = 0.99;
  int view_radius = 2;             // agents' egocentric window (Chebyshev)
  int enemy_vision = 2;            // enemies' detection range (Chebyshev)
  int catch_distance = 1;          // Manhattan distance at which agents are caught
  int enemy_move_period = 1;       // enemies act every k-th step
  int territory_min_col = 0;       // enemies never hunt or move west of this column
  std::vector<std::pair<int, int>> agent_spawns{{1, 1}, {3, 1}, {5, 1}};
  std::pair<int, int> goal{3, 5};
  std::vector<std::pair<int, int>> enemy_spawns{{2, 4}, {4, 4}};
  std::vector<std::pair<int, int>> enemy_attack_points{{2, 4}, {4, 4}};
  double win_reward = 10.0;
  double catch_penalty = -1.0;
  double step_penalty = -0.01;
  int min_dockers = 2;
  bool shuffle_spawns = false;  // permute agent spawn cells per reset seed
  std::vector<std::pair<int, int>> walls;  // impassable cells (vision passes over)
};

class LureGridEnv : public Env {
 public:
  // actions: 0 stay, 1 up, 2 down, 3 left, 4 right
  static constexpr int kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4;

  explicit LureGridEnv(LureGridSpec spec) : spec_(std::move(spec)) {
    wall_.assign(spec_.height * spec_.width, 0);
    for (auto [r, c] : spec_.walls) {
      if (r < 0 || r >= spec_.height || c < 0 || c >= spec_.width) throw ParseError("lure grid: wall out of bounds");
      wall_[r * spec_.width + c] = 1;
    }
    if (blocked(spec_.goal.first, spec_.goal.second)) throw ParseError("lure grid: goal on a wall");
    for (auto [r, c] : spec_.agent_spawns)
      if (blocked(r, c)) throw ParseError("lure grid: agent spawn on a wall");
    for (auto [r, c] : spec_.enemy_spawns)
      if (blocked(r, c)) throw ParseError("lure grid: enemy spawn on a wall");
    int side = 2 * spec_.view_radius + 1;
    info_.name = spec_.name;
    info_.n_agents = static_cast<int>(spec_.agent_spawns.size());
    info_.n_actions.assign(info_.n_agents, 5);
    info_.obs_dim = 2 * side * side + 5;  // ally+enemy windows, own pos, goal delta, time
    info_.state_dim = 4 * info_.n_agents + 2 * static_cast<int>(spec_.enemy_spawns.size()) + 1;
    info_.gamma = spec_.gamma;
    info_.t_max = spec_.t_max;
  }

  const EnvInfo& info() const override { return info_; }

  ResetResult reset(std::uint64_t seed) override {
    t_ = 0;
    over_ = false;
    won_ = false;
    agents_.clear();
    std::vector<std::pair<int, int>> spawns = spec_.agent_spawns;
    if (spec_.shuffle_spawns) {
      Rng rng(Rng::derive(seed, "lure_spawn"));
      for (std::size_t i = spawns.size(); i > 1; --i) std::swap(spawns[i - 1], spawns[rng.uniform_int(static_cast<int>(i))]);
    }
    for (auto [r, c] : spawns) agents_.push_back(AgentState{r, c, true, false});
    enemies_ = spec_.enemy_spawns;
    return ResetResult{observations(), true_state()};
  }

  StepResult step(const std::vector<int>& joint) override {
    check_actions(joint, over_);
    StepResult out;

    // 1. agents move simultaneously; moves off the grid are ignored
    for (int a = 0; a < info_.n_agents; ++a) {
      AgentState& ag = agents_[a];
      if (!ag.alive || ag.docked) continue;
      auto [dr, dc] = delta(joint[a]);
      int nr = ag.r + dr, nc = ag.c + dc;
      if (nr >= 0 && nr < spec_.height && nc >= 0 && nc < spec_.width && !blocked(nr, nc)) {
        ag.r = nr;
        ag.c = nc;
      }
    }

    // 2. docking: reaching the goal removes the agent from the board
    for (AgentState& ag : agents_)
      if (ag.alive && !ag.docked && ag.r == spec_.goal.first && ag.c == spec_.goal.second) ag.docked = true;

    // 3. enemies: chase the nearest visible agent, otherwise hold the attack point
    bool enemies_move = (t_ % spec_.enemy_move_period) == spec_.enemy_move_period - 1;
    for (std::size_t e = 0; enemies_move && e < enemies_.size(); ++e) {
      auto [er, ec] = enemies_[e];
      int target = -1, best_dist = 0;
      for (int a = 0; a < info_.n_agents; ++a) {
        const AgentState& ag = agents_[a];
        if (!ag.alive || ag.docked) continue;
        if (ag.c < spec_.territory_min_col) continue;  // outside the hunting zone
        int cheb = std::max(std::abs(ag.r - er), std::abs(ag.c - ec));
        if (cheb > spec_.enemy_vision) continue;
        int manh = std::abs(ag.r - er) + std::abs(ag.c - ec);
        if (target < 0 || manh < best_dist) {
          target = a;
          best_dist = manh;
        }
      }
      int tr, tc;
      if (target >= 0) {
        tr = agents_[target].r;
        tc = agents_[target].c;
      } else {
        tr = spec_.enemy_attack_points[e].first;
        tc = spec_.enemy_attack_points[e].second;
      }
      enemies_[e] = step_toward(er, ec, tr, tc);
    }

    // 4. catches
    for (AgentState& ag : agents_) {
      if (!ag.alive || ag.docked) continue;
      for (auto [er, ec] : enemies_) {
        if (std::abs(ag.r - er) + std::abs(ag.c - ec) <= spec_.catch_distance) {
          ag.alive = false;
          out.reward += spec_.catch_penalty;
          break;
        }
      }
    }

    // 5. outcome
    int docked = 0, living = 0;
    for (const AgentState& ag : agents_) {
      if (ag.docked) ++docked;
      if (ag.alive && !ag.docked) ++living;
    }
    if (docked >= spec_.min_dockers) {
      out.reward += spec_.win_reward;
      out.terminal = true;
      won_ = true;
    } else if (docked + living < spec_.min_dockers) {
      out.terminal = true;  // the team can no longer win
    }

    out.reward += spec_.step_penalty;
    ++t_;
    if (!out.terminal && t_ >= spec_.t_max) out.truncated = true;
    over_ = out.terminal || out.truncated;
    out.won = won_;
    out.obs = observations();
    out.state = true_state();
    return out;
  }

  std::vector<double> true_state() const override {
    std::vector<double> s;
    double hn = spec_.height - 1, wn = spec_.width - 1;
    for (const AgentState& ag : agents_) {
      s.push_back(ag.r / hn);
      s.push_back(ag.c / wn);
      s.push_back(ag.alive ? 1.0 : 0.0);
      s.push_back(ag.docked ? 1.0 : 0.0);
    }
    for (auto [er, ec] : enemies_) {
      s.push_back(er / hn);
      s.push_back(ec / wn);
    }
    s.push_back(static_cast<double>(t_) / spec_.t_max);
    return s;
  }

  std::unique_ptr<Env> clone_fresh() const override { return std::make_unique<LureGridEnv>(spec_); }

  const LureGridSpec& spec() const { return spec_; }

  // Board introspection for tests and behavior logging.
  struct AgentState {
    int r = 0, c = 0;
    bool alive = true, docked = false;
  };
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<std::pair<int, int>>& enemies() const { return enemies_; }

 private:
  static std::pair<int, int> delta(int action) {
    switch (action) {
      case kUp: return {-1, 0};
      case kDown: return {1, 0};
      case kLeft: return {0, -1};
      case kRight: return {0, 1};
      default: return {0, 0};
    }
  }

  bool blocked(int r, int c) const { return wall_[r * spec_.width + c] != 0; }

  // One step toward the target, moving along the axis with the larger gap
  // first (rows before columns on ties). Enemies never enter walls or the
  // goal cell.
  std::pair<int, int> step_toward(int r, int c, int tr, int tc) const {
    int dr = tr - r, dc = tc - c;
    if (dr == 0 && dc == 0) return {r, c};
    auto passable = [&](std::pair<int, int> cell) {
      return cell != spec_.goal && !blocked(cell.first, cell.second) && cell.second >= spec_.territory_min_col;
    };
    std::pair<int, int> row_move{r + (dr > 0 ? 1 : -1), c};
    std::pair<int, int> col_move{r, c + (dc > 0 ? 1 : -1)};
    bool row_first = (std::abs(dr) >= std::abs(dc) && dr != 0);
    std::pair<int, int> first = row_first ? row_move : col_move;
    std::pair<int, int> second = row_first ? col_move : row_move;
    bool second_exists = row_first ? dc != 0 : dr != 0;
    if (passable(first)) return first;
    if (second_exists && passable(second)) return second;
    return {r, c};
  }

  std::vector<std::vector<double>> observations() const {
    int side = 2 * spec_.view_radius + 1;
    std::vector<std::vector<double>> all;
    all.reserve(info_.n_agents);
    for (int a = 0; a < info_.n_agents; ++a) {
      const AgentState& ag = agents_[a];
      std::vector<double> o(info_.obs_dim, 0.0);
      if (!ag.alive || ag.docked) {
        all.push_back(std::move(o));
        continue;
      }
      auto window_index = [&](int r, int c) -> int {
        int dr = r - ag.r, dc = c - ag.c;
        if (std::abs(dr) > spec_.view_radius || std::abs(dc) > spec_.view_radius) return -1;
        return (dr + spec_.view_radius) * side + (dc + spec_.view_radius);
      };
      for (int b = 0; b < info_.n_agents; ++b) {
        if (b == a || !agents_[b].alive || agents_[b].docked) continue;
        int w = window_index(agents_[b].r, agents_[b].c);
        if (w >= 0) o[w] = 1.0;
      }
      for (auto [er, ec] : enemies_) {
        int w = window_index(er, ec);
        if (w >= 0) o[side * side + w] = 1.0;
      }
      int base = 2 * side * side;
      o[base + 0] = ag.r / double(spec_.height - 1);
      o[base + 1] = ag.c / double(spec_.width - 1);
      o[base + 2] = (spec_.goal.first - ag.r) / double(spec_.height - 1);
      o[base + 3] = (spec_.goal.second - ag.c) / double(spec_.width - 1);
      o[base + 4] = static_cast<double>(t_) / spec_.t_max;
      all.push_back(std::move(o));
    }
    return all;
  }

  LureGridSpec spec_;
  EnvInfo info_;
  std::vector<AgentState> agents_;
  std::vector<std::pair<int, int>> enemies_;
  std::vector<char> wall_;
  int t_ = 0;
  bool over_ = true;
  bool won_ = false;
};

}  // namespace lan
