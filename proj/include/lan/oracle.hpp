#pragma once

// Exact ground truth for small Dec-POMDPs: joint-policy evaluation by
// expectation over the (state, joint-history) tree, exact best responses via
// the induced single-agent POMDP (co-player policies marginalized into the
// transition and reward functions), and exhaustive search for the optimal
// decentralized joint policy. Everything here runs in double precision and
// enforces explicit capacity bounds.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "lan/envs/matrix_game.hpp"
#include "lan/errors.hpp"
#include "lan/rng.hpp"

namespace lan {

struct Outcome {
  double prob = 1.0;
  int next_state = 0;
  double reward = 0;
  bool terminal = false;
};

// Enumerable model of a Dec-POMDP with deterministic observations.
class TabularGame {
 public:
  virtual ~TabularGame() = default;
  int n_agents = 0;
  std::vector<int> n_actions;
  double gamma = 1.0;
  int horizon = 1;
  int initial_state = 0;
  virtual std::vector<Outcome> transition(int state, const std::vector<int>& joint) const = 0;
  // Deterministic observation symbol an agent receives in a state.
  virtual int observation(int state, int agent) const = 0;
};

// Agent history as alternating symbols [o0, u0, o1, u1, ..., ot].
using HistoryKey = std::vector<int>;

// Per-agent policy: distribution over the agent's actions given its history.
using AgentPolicy = std::function<std::vector<double>(const HistoryKey&)>;

inline AgentPolicy constant_policy(int action, int n_actions) {
  return [action, n_actions](const HistoryKey&) {
    std::vector<double> d(n_actions, 0.0);
    d[action] = 1.0;
    return d;
  };
}

inline AgentPolicy uniform_policy(int n_actions) {
  return [n_actions](const HistoryKey&) { return std::vector<double>(n_actions, 1.0 / n_actions); };
}

// Deterministic policy from a history->action map with an open-loop
// fallback sequence for histories outside the map.
inline AgentPolicy table_policy(std::map<HistoryKey, int> table, std::vector<int> fallback_seq, int n_actions) {
  return [table = std::move(table), fallback_seq = std::move(fallback_seq), n_actions](const HistoryKey& h) {
    std::vector<double> d(n_actions, 0.0);
    auto it = table.find(h);
    if (it != table.end()) {
      d[it->second] = 1.0;
    } else {
      int t = static_cast<int>(h.size() / 2);
      d[fallback_seq[t % fallback_seq.size()]] = 1.0;
    }
    return d;
  };
}

namespace detail {

struct Budget {
  long remaining;
  void spend(const char* what) {
    if (--remaining < 0) throw CapacityError(std::string("oracle: ") + what + " exceeds the enumeration bound");
  }
};

// Enumerates joint actions with nonzero probability under the product of
// per-agent distributions.
inline void for_each_joint(const std::vector<std::vector<double>>& dists,
                           const std::function<void(const std::vector<int>&, double)>& f) {
  std::vector<int> joint(dists.size(), 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t a, double p) {
    if (a == dists.size()) {
      f(joint, p);
      return;
    }
    for (std::size_t u = 0; u < dists[a].size(); ++u) {
      if (dists[a][u] <= 0) continue;
      joint[a] = static_cast<int>(u);
      rec(a + 1, p * dists[a][u]);
    }
  };
  rec(0, 1.0);
}

}  // namespace detail

// Exact expected discounted return of a joint policy from the initial state.
inline double evaluate_joint_policy(const TabularGame& game, const std::vector<AgentPolicy>& policies,
                                    long budget_nodes = 100000) {
  if (static_cast<int>(policies.size()) != game.n_agents)
    throw ContractError("evaluate_joint_policy: one policy per agent required");
  detail::Budget budget{budget_nodes};
  std::function<double(int, const std::vector<HistoryKey>&, int)> walk =
      [&](int state, const std::vector<HistoryKey>& hists, int t) -> double {
    if (t >= game.horizon) return 0.0;
    budget.spend("policy evaluation tree");
    std::vector<std::vector<double>> dists;
    dists.reserve(policies.size());
    for (int a = 0; a < game.n_agents; ++a) dists.push_back(policies[a](hists[a]));
    double value = 0;
    detail::for_each_joint(dists, [&](const std::vector<int>& joint, double pj) {
      for (const Outcome& o : game.transition(state, joint)) {
        double contrib = pj * o.prob * o.reward;
        if (!o.terminal && t + 1 < game.horizon) {
          std::vector<HistoryKey> next = hists;
          for (int a = 0; a < game.n_agents; ++a) {
            next[a].push_back(joint[a]);
            next[a].push_back(game.observation(o.next_state, a));
          }
          contrib += pj * o.prob * game.gamma * walk(o.next_state, next, t + 1);
        }
        value += contrib;
      }
    });
    return value;
  };
  std::vector<HistoryKey> roots(game.n_agents);
  for (int a = 0; a < game.n_agents; ++a) roots[a] = {game.observation(game.initial_state, a)};
  return walk(game.initial_state, roots, 0);
}

struct BestResponse {
  std::map<HistoryKey, int> policy;                  // argmax action per reachable history
  std::map<HistoryKey, std::vector<double>> q;       // exact Q over reachable histories
  double value = 0;
};

// Exact best response of one agent against fixed co-player policies. The
// co-players are folded into the dynamics (their action distributions weight
// the transition and reward), and the resulting single-agent POMDP is solved
// over the agent's reachable histories with explicit beliefs over
// (state, co-player histories).
inline BestResponse best_response(const TabularGame& game, const std::vector<AgentPolicy>& co_policies, int agent,
                                  long budget_nodes = 100000) {
  if (agent < 0 || agent >= game.n_agents) throw ContractError("best_response: agent index out of range");
  detail::Budget budget{budget_nodes};
  BestResponse out;

  struct BeliefPoint {
    int state;
    std::vector<HistoryKey> co_hists;  // indexed by agent id; entry for `agent` unused
  };
  using Belief = std::vector<std::pair<BeliefPoint, double>>;

  std::function<double(const HistoryKey&, const Belief&, int)> solve = [&](const HistoryKey& hist,
                                                                           const Belief& belief, int t) -> double {
    if (t >= game.horizon) return 0.0;
    budget.spend("best-response tree");
    int n_u = game.n_actions[agent];
    std::vector<double> q(n_u, 0.0);
    for (int ua = 0; ua < n_u; ++ua) {
      // successor beliefs keyed by the agent's next observation
      std::map<int, Belief> next_beliefs;
      std::map<int, double> next_mass;
      for (const auto& [point, pb] : belief) {
        std::vector<std::vector<double>> dists(game.n_agents);
        for (int b = 0; b < game.n_agents; ++b)
          dists[b] = (b == agent) ? one_hot(ua, n_u) : co_policies[b](point.co_hists[b]);
        detail::for_each_joint(dists, [&](const std::vector<int>& joint, double pj) {
          for (const Outcome& o : game.transition(point.state, joint)) {
            double p = pb * pj * o.prob;
            q[ua] += p * o.reward;
            if (!o.terminal && t + 1 < game.horizon) {
              BeliefPoint next{o.next_state, point.co_hists};
              for (int b = 0; b < game.n_agents; ++b) {
                if (b == agent) continue;
                next.co_hists[b].push_back(joint[b]);
                next.co_hists[b].push_back(game.observation(o.next_state, b));
              }
              int obs = game.observation(o.next_state, agent);
              next_beliefs[obs].emplace_back(std::move(next), p);
              next_mass[obs] += p;
            }
          }
        });
      }
      for (auto& [obs, nb] : next_beliefs) {
        double mass = next_mass[obs];
        for (auto& [pt, p] : nb) p /= mass;
        HistoryKey next_hist = hist;
        next_hist.push_back(ua);
        next_hist.push_back(obs);
        q[ua] += game.gamma * mass * solve(next_hist, nb, t + 1);
      }
    }
    int best = 0;
    for (int u = 1; u < n_u; ++u)
      if (q[u] > q[best]) best = u;
    out.q[hist] = q;
    out.policy[hist] = best;
    return q[best];
  };

  Belief root;
  BeliefPoint origin;
  origin.state = game.initial_state;
  origin.co_hists.resize(game.n_agents);
  for (int b = 0; b < game.n_agents; ++b)
    if (b != agent) origin.co_hists[b] = {game.observation(game.initial_state, b)};
  root.emplace_back(origin, 1.0);
  out.value = solve({game.observation(game.initial_state, agent)}, root, 0);
  return out;
}

struct OptimalJoint {
  double value = 0;
  // Optimal joint action sequences [sequence][t][agent]; all ties listed.
  std::vector<std::vector<std::vector<int>>> sequences;
};

// Exhaustive search over deterministic decentralized joint policies. For
// deterministic dynamics every such policy realizes exactly one joint action
// sequence, so the search runs over sequences.
inline OptimalJoint enumerate_optimal_joint(const TabularGame& game, long budget_leaves = 1000000) {
  detail::Budget budget{budget_leaves};
  OptimalJoint out;
  out.value = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> current;

  std::function<void(int, int, double, double)> rec = [&](int state, int t, double ret, double disc) {
    if (t >= game.horizon) {
      budget.spend("joint policy enumeration");
      if (ret > out.value + 1e-12) {
        out.value = ret;
        out.sequences.clear();
      }
      if (std::fabs(ret - out.value) <= 1e-12) out.sequences.push_back(current);
      return;
    }
    std::vector<int> joint(game.n_agents, 0);
    std::function<void(int)> actions = [&](int a) {
      if (a == game.n_agents) {
        std::vector<Outcome> outs = game.transition(state, joint);
        if (outs.size() != 1 || outs[0].prob != 1.0)
          throw ContractError("enumerate_optimal_joint requires deterministic dynamics");
        const Outcome& o = outs[0];
        current.push_back(joint);
        if (o.terminal) {
          budget.spend("joint policy enumeration");
          double total = ret + disc * o.reward;
          if (total > out.value + 1e-12) {
            out.value = total;
            out.sequences.clear();
          }
          if (std::fabs(total - out.value) <= 1e-12) out.sequences.push_back(current);
        } else {
          rec(o.next_state, t + 1, ret + disc * o.reward, disc * game.gamma);
        }
        current.pop_back();
        return;
      }
      for (int u = 0; u < game.n_actions[a]; ++u) {
        joint[a] = u;
        actions(a + 1);
      }
    };
    actions(0);
  };
  rec(game.initial_state, 0, 0.0, 1.0);
  return out;
}

// Open-loop per-agent policies realizing a joint action sequence.
inline std::vector<AgentPolicy> open_loop_policies(const std::vector<std::vector<int>>& sequence,
                                                   const std::vector<int>& n_actions) {
  std::vector<AgentPolicy> out;
  for (std::size_t a = 0; a < n_actions.size(); ++a) {
    std::vector<int> seq;
    for (const auto& step : sequence) seq.push_back(step[a]);
    out.push_back([seq, n = n_actions[a]](const HistoryKey& h) {
      std::vector<double> d(n, 0.0);
      int t = static_cast<int>(h.size() / 2);
      d[seq[t % seq.size()]] = 1.0;
      return d;
    });
  }
  return out;
}

struct McEstimate {
  double mean = 0;
  double std_error = 0;
};

// Monte-Carlo rollout estimate of a joint policy's value; the independent
// cross-check for evaluate_joint_policy.
inline McEstimate mc_value(const TabularGame& game, const std::vector<AgentPolicy>& policies, long episodes,
                           Rng& rng) {
  double sum = 0, sum_sq = 0;
  for (long e = 0; e < episodes; ++e) {
    int state = game.initial_state;
    std::vector<HistoryKey> hists(game.n_agents);
    for (int a = 0; a < game.n_agents; ++a) hists[a] = {game.observation(state, a)};
    std::vector<double> rewards;
    for (int t = 0; t < game.horizon; ++t) {
      std::vector<int> joint(game.n_agents);
      for (int a = 0; a < game.n_agents; ++a) {
        std::vector<double> d = policies[a](hists[a]);
        double roll = rng.uniform(), acc = 0;
        int pick = static_cast<int>(d.size()) - 1;
        for (std::size_t u = 0; u < d.size(); ++u) {
          acc += d[u];
          if (roll < acc) {
            pick = static_cast<int>(u);
            break;
          }
        }
        joint[a] = pick;
      }
      const std::vector<Outcome> outs = game.transition(state, joint);
      double roll = rng.uniform(), acc = 0;
      const Outcome* chosen = &outs.back();
      for (const Outcome& o : outs) {
        acc += o.prob;
        if (roll < acc) {
          chosen = &o;
          break;
        }
      }
      rewards.push_back(chosen->reward);
      if (chosen->terminal) break;
      state = chosen->next_state;
      for (int a = 0; a < game.n_agents; ++a) {
        hists[a].push_back(joint[a]);
        hists[a].push_back(game.observation(state, a));
      }
    }
    double ret = 0;
    for (std::size_t i = rewards.size(); i-- > 0;) ret = rewards[i] + game.gamma * ret;
    sum += ret;
    sum_sq += ret * ret;
  }
  McEstimate est;
  est.mean = sum / episodes;
  double var = std::max(0.0, sum_sq / episodes - est.mean * est.mean);
  est.std_error = std::sqrt(var / episodes);
  return est;
}

// ---- tabular view of the matrix-game fixtures ------------------------------

class MatrixTabularGame : public TabularGame {
 public:
  explicit MatrixTabularGame(MatrixGameSpec spec) : spec_(std::move(spec)) {
    n_agents = 2;
    n_actions = {spec_.rows(), spec_.cols()};
    gamma = spec_.gamma;
    horizon = spec_.horizon;
    initial_state = 0;
  }

  // States: 0 is the start; 1 + (t-1)*R*C + joint encodes (t, last joint).
  std::vector<Outcome> transition(int state, const std::vector<int>& joint) const override {
    int t = state_time(state);
    Outcome o;
    o.prob = 1.0;
    o.reward = spec_.payoff[joint[0]][joint[1]];
    o.terminal = (t + 1 >= spec_.horizon);
    o.next_state = o.terminal ? state : 1 + t * spec_.rows() * spec_.cols() + joint[0] * spec_.cols() + joint[1];
    return {o};
  }

  // Both agents observe the last joint action (0 at the start).
  int observation(int state, int) const override {
    if (state == 0) return 0;
    return 1 + (state - 1) % (spec_.rows() * spec_.cols());
  }

  const MatrixGameSpec& spec() const { return spec_; }

 private:
  int state_time(int state) const { return state == 0 ? 0 : (state - 1) / (spec_.rows() * spec_.cols()) + 1; }

  MatrixGameSpec spec_;
};

}  // namespace lan
