#pragma once

#include <vector>

#include "lan/env.hpp"
#include "lan/nn.hpp"
#include "lan/replay.hpp"
#include "lan/rng.hpp"

namespace lan {

// Network dimensions. id_dim is the width of the agent-id one-hot slot; it
// defaults to n_agents and may be set larger, in which case the parameter
// count is independent of the agent count outright.
struct ModelDims {
  int obs_dim = 0;
  int n_agents = 0;
  int id_dim = 0;
  int state_dim = 0;
  std::vector<int> n_actions;
  int max_actions = 0;
  int ff = 64;      // feed-forward width in front of the GRU
  int hidden = 64;  // GRU state width
  int embed = 128;  // per-agent embedding width in the value network
  int trunk = 128;  // value trunk width

  int adv_in() const { return obs_dim + max_actions + id_dim; }
  int htilde_dim() const { return hidden + obs_dim + max_actions + id_dim; }

  static ModelDims from_env(const EnvInfo& info) {
    ModelDims d;
    d.obs_dim = info.obs_dim;
    d.n_agents = info.n_agents;
    d.id_dim = info.n_agents;
    d.state_dim = info.state_dim;
    d.n_actions = info.n_actions;
    d.max_actions = info.max_actions();
    return d;
  }
};

template <typename S>
struct ActResult {
  std::vector<int> actions;
  Tensor<S> hidden;  // [n_agents x hidden], carried across the episode
};

struct UpdateResult {
  double loss = 0;
  double grad_norm = 0;
};

// Common surface of the LAN, IQL and VDN learners. Acting is decentralized
// by construction: it receives per-agent observations and last actions only,
// never the true state.
template <typename S>
class Learner {
 public:
  virtual ~Learner() = default;
  virtual const char* algorithm() const = 0;
  virtual const ModelDims& dims() const = 0;
  virtual Tensor<S> initial_hidden() const {
    return Tensor<S>::zeros({static_cast<std::size_t>(dims().n_agents), static_cast<std::size_t>(dims().hidden)});
  }
  virtual ActResult<S> act(const std::vector<std::vector<double>>& obs, const std::vector<int>& last_actions,
                           const Tensor<S>& hidden, double epsilon, Rng& rng) const = 0;
  virtual UpdateResult update(const EpisodeBatch<S>& batch) = 0;
  virtual void sync_targets() = 0;
  virtual ParamSet<S>& online_params() = 0;
  virtual const ParamSet<S>& online_params() const = 0;
};

}  // namespace lan
