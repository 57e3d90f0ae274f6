#pragma once

#include <cstring>
#include <deque>
#include <optional>
#include <vector>

#include "lan/errors.hpp"
#include "lan/rng.hpp"
#include "lan/tensor.hpp"

namespace lan {

// One complete episode. Observations and states have length() + 1 entries:
// the final entry is the post-episode observation used for bootstrapping on
// time-limit truncation.
struct Episode {
  int n_agents = 0;
  std::vector<std::vector<std::vector<double>>> obs;  // [t][agent][dim], t = 0..L
  std::vector<std::vector<double>> state;             // [t], t = 0..L
  std::vector<std::vector<int>> actions;              // [t][agent], t = 0..L-1
  std::vector<double> rewards;                        // [t], t = 0..L-1
  bool terminal = false;
  bool truncated = false;
  bool won = false;

  int length() const { return static_cast<int>(rewards.size()); }

  void validate() const {
    if (!(terminal || truncated)) throw ContractError("episode: incomplete (neither terminal nor truncated)");
    if (terminal && truncated) throw ContractError("episode: terminal and truncated are mutually exclusive");
    std::size_t len = rewards.size();
    if (len == 0) throw ContractError("episode: empty");
    if (actions.size() != len || obs.size() != len + 1 || state.size() != len + 1)
      throw ContractError("episode: inconsistent lengths");
    for (const auto& step_obs : obs)
      if (static_cast<int>(step_obs.size()) != n_agents) throw ContractError("episode: wrong per-agent obs count");
    for (const auto& step_act : actions)
      if (static_cast<int>(step_act.size()) != n_agents) throw ContractError("episode: wrong per-agent action count");
    for (double r : rewards)
      if (!std::isfinite(r)) throw ContractError("episode: non-finite reward");
  }
};

// Episodes stacked over batch and time with a validity mask. T is the
// maximum episode length in the batch; every padded position is zero and
// mask[t,b] = 1 iff t < length(b).
template <typename S>
struct EpisodeBatch {
  int batch = 0, t_max = 0, n_agents = 0, obs_dim = 0, state_dim = 0;
  int bootstrap_end = 0;  // largest t+1 any target needs; 0 if every step is terminal
  std::vector<S> obs;        // ((t*B + b)*A + a)*obs_dim, t = 0..T
  std::vector<S> state;      // (t*B + b)*state_dim,       t = 0..T
  std::vector<int> actions;  // (t*B + b)*A + a,           t = 0..T-1
  std::vector<S> rewards;    // t*B + b
  std::vector<S> mask;       // t*B + b
  std::vector<S> terminal;   // t*B + b: 1 if step t ends the episode for real
  std::vector<int> lengths;  // per episode

  // [B*A x obs_dim] tensor of all agents' observations at time t.
  Tensor<S> obs_at(int t) const {
    Tensor<S> out(Shape{static_cast<std::size_t>(batch * n_agents), static_cast<std::size_t>(obs_dim)});
    std::memcpy(out.data(), obs.data() + static_cast<std::size_t>(t) * batch * n_agents * obs_dim,
                sizeof(S) * batch * n_agents * obs_dim);
    return out;
  }

  // [B x state_dim] tensor of the true states at time t.
  Tensor<S> state_at(int t) const {
    Tensor<S> out(Shape{static_cast<std::size_t>(batch), static_cast<std::size_t>(state_dim)});
    std::memcpy(out.data(), state.data() + static_cast<std::size_t>(t) * batch * state_dim,
                sizeof(S) * batch * state_dim);
    return out;
  }

  int action(int t, int b, int a) const { return actions[(static_cast<std::size_t>(t) * batch + b) * n_agents + a]; }
  S reward(int t, int b) const { return rewards[static_cast<std::size_t>(t) * batch + b]; }
  S mask_at(int t, int b) const { return mask[static_cast<std::size_t>(t) * batch + b]; }
  S terminal_at(int t, int b) const { return terminal[static_cast<std::size_t>(t) * batch + b]; }
};

template <typename S>
EpisodeBatch<S> make_batch(const std::vector<const Episode*>& episodes) {
  if (episodes.empty()) throw ContractError("make_batch: no episodes");
  EpisodeBatch<S> out;
  out.batch = static_cast<int>(episodes.size());
  out.n_agents = episodes[0]->n_agents;
  out.obs_dim = static_cast<int>(episodes[0]->obs[0][0].size());
  out.state_dim = static_cast<int>(episodes[0]->state[0].size());
  for (const Episode* e : episodes) {
    e->validate();
    out.t_max = std::max(out.t_max, e->length());
    out.lengths.push_back(e->length());
  }
  int B = out.batch, T = out.t_max, A = out.n_agents;
  out.obs.assign(static_cast<std::size_t>(T + 1) * B * A * out.obs_dim, S(0));
  out.state.assign(static_cast<std::size_t>(T + 1) * B * out.state_dim, S(0));
  out.actions.assign(static_cast<std::size_t>(T) * B * A, 0);
  out.rewards.assign(static_cast<std::size_t>(T) * B, S(0));
  out.mask.assign(static_cast<std::size_t>(T) * B, S(0));
  out.terminal.assign(static_cast<std::size_t>(T) * B, S(0));
  for (int b = 0; b < B; ++b) {
    const Episode& e = *episodes[b];
    for (int t = 0; t <= e.length(); ++t) {
      for (int a = 0; a < A; ++a) {
        const std::vector<double>& o = e.obs[t][a];
        S* dst = out.obs.data() + ((static_cast<std::size_t>(t) * B + b) * A + a) * out.obs_dim;
        for (int d = 0; d < out.obs_dim; ++d) dst[d] = static_cast<S>(o[d]);
      }
      S* sdst = out.state.data() + (static_cast<std::size_t>(t) * B + b) * out.state_dim;
      for (int d = 0; d < out.state_dim; ++d) sdst[d] = static_cast<S>(e.state[t][d]);
    }
    for (int t = 0; t < e.length(); ++t) {
      for (int a = 0; a < A; ++a) out.actions[(static_cast<std::size_t>(t) * B + b) * A + a] = e.actions[t][a];
      out.rewards[static_cast<std::size_t>(t) * B + b] = static_cast<S>(e.rewards[t]);
      out.mask[static_cast<std::size_t>(t) * B + b] = S(1);
    }
    if (e.terminal) out.terminal[static_cast<std::size_t>(e.length() - 1) * B + b] = S(1);
  }
  for (int t = 0; t < T; ++t)
    for (int b = 0; b < B; ++b)
      if (out.mask[static_cast<std::size_t>(t) * B + b] != S(0) &&
          out.terminal[static_cast<std::size_t>(t) * B + b] == S(0))
        out.bootstrap_end = std::max(out.bootstrap_end, t + 1);
  return out;
}

// Inverse of make_batch over the valid region; used to verify that batching
// is lossless.
template <typename S>
std::vector<Episode> unbatch(const EpisodeBatch<S>& batch) {
  std::vector<Episode> out;
  for (int b = 0; b < batch.batch; ++b) {
    Episode e;
    e.n_agents = batch.n_agents;
    int len = batch.lengths[b];
    for (int t = 0; t <= len; ++t) {
      std::vector<std::vector<double>> obs_t;
      for (int a = 0; a < batch.n_agents; ++a) {
        const S* src = batch.obs.data() + ((static_cast<std::size_t>(t) * batch.batch + b) * batch.n_agents + a) *
                                              batch.obs_dim;
        obs_t.emplace_back(src, src + batch.obs_dim);
      }
      e.obs.push_back(std::move(obs_t));
      const S* sdst = batch.state.data() + (static_cast<std::size_t>(t) * batch.batch + b) * batch.state_dim;
      e.state.emplace_back(sdst, sdst + batch.state_dim);
    }
    for (int t = 0; t < len; ++t) {
      std::vector<int> acts;
      for (int a = 0; a < batch.n_agents; ++a) acts.push_back(batch.action(t, b, a));
      e.actions.push_back(std::move(acts));
      e.rewards.push_back(static_cast<double>(batch.reward(t, b)));
    }
    e.terminal = batch.terminal_at(len - 1, b) != S(0);
    e.truncated = !e.terminal;
    out.push_back(std::move(e));
  }
  return out;
}

// FIFO episode store with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ContractError("replay buffer: capacity must be positive");
  }

  void push(Episode episode) {
    episode.validate();
    if (episodes_.size() == capacity_) episodes_.pop_front();
    episodes_.push_back(std::move(episode));
  }

  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool ready(std::size_t batch_size) const { return episodes_.size() >= batch_size; }

  // Uniform sample with replacement; empty only when there is nothing to
  // sample. Trainers gate updates on ready() for the warmup threshold.
  std::optional<std::vector<const Episode*>> sample(std::size_t batch_size, Rng& rng) const {
    if (episodes_.empty()) return std::nullopt;
    std::vector<const Episode*> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
      out.push_back(&episodes_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(episodes_.size())))]);
    return out;
  }

  const Episode& at(std::size_t i) const { return episodes_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;
};

}  // namespace lan
