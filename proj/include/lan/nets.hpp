#pragma once

// The two network bodies: the shared per-agent recurrent trunk (advantage
// head for LAN, Q head for the baselines) and the centralized value network
// that pools per-agent embeddings by summation.

#include <vector>

#include "lan/learner.hpp"
#include "lan/nn.hpp"
#include "lan/ops.hpp"
#include "lan/replay.hpp"

namespace lan {

// Feed-forward 64 + GRU 64 + linear head, shared by all agents. The input of
// each row is [observation, one-hot(last action), one-hot(agent id)].
struct TrunkSpec {
  LinearSpec ff;
  GruSpec gru;
  LinearSpec head;
};

template <typename S>
TrunkSpec add_trunk(ParamSet<S>& params, const std::string& prefix, const ModelDims& d) {
  TrunkSpec t;
  t.ff = add_linear(params, prefix + ".ff", d.adv_in(), d.ff);
  t.gru = add_gru(params, prefix + ".gru", d.ff, d.hidden);
  t.head = add_linear(params, prefix + ".head", d.hidden, d.max_actions);
  return t;
}

template <typename S>
void init_trunk(ParamSet<S>& params, const TrunkSpec& t, Rng& rng) {
  init_linear(params, t.ff, rng);
  init_gru(params, t.gru, rng);
  init_linear(params, t.head, rng);
}

template <typename S>
struct TrunkStep {
  Var<S> out;  // [rows x max_actions]
  Var<S> h;    // [rows x hidden]
};

// One trunk step over `rows` stacked agent rows. When mean_constraint is
// set, each output row is shifted by the mean over that agent's valid
// actions so the row means are exactly zero.
template <typename S>
TrunkStep<S> trunk_step(const Bound<S>& bound, const TrunkSpec& net, Var<S> input, Var<S> h_prev,
                        bool mean_constraint, const std::vector<std::size_t>& row_valid) {
  Var<S> x = relu(apply_linear(bound, net.ff, input));
  Var<S> h = gru_step(bound, net.gru, x, h_prev);
  Var<S> out = apply_linear(bound, net.head, h);
  if (mean_constraint) out = sub_row_mean(out, row_valid);
  return {out, h};
}

// Centralized value: shared embedding of each agent's [h, o, u, id] tuple,
// summed over agents, concatenated with the true state, then a two-layer
// trunk down to a scalar.
struct ValueSpec {
  LinearSpec embed;
  LinearSpec trunk1;
  LinearSpec trunk2;
  LinearSpec out;
};

template <typename S>
ValueSpec add_value_net(ParamSet<S>& params, const std::string& prefix, const ModelDims& d) {
  ValueSpec v;
  v.embed = add_linear(params, prefix + ".embed", d.htilde_dim(), d.embed);
  v.trunk1 = add_linear(params, prefix + ".trunk1", d.embed + d.state_dim, d.trunk);
  v.trunk2 = add_linear(params, prefix + ".trunk2", d.trunk, d.trunk);
  v.out = add_linear(params, prefix + ".out", d.trunk, 1);
  return v;
}

template <typename S>
void init_value_net(ParamSet<S>& params, const ValueSpec& v, Rng& rng) {
  init_linear(params, v.embed, rng);
  init_linear(params, v.trunk1, rng);
  init_linear(params, v.trunk2, rng);
  init_linear(params, v.out, rng);
}

// htilde: [B*A x htilde_dim] rows in agent-id order within each batch entry;
// state: [B x state_dim]. Returns [B x 1].
template <typename S>
Var<S> value_forward(const Bound<S>& bound, const ValueSpec& net, Var<S> htilde, Var<S> state, int n_agents) {
  Var<S> embedded = relu(apply_linear(bound, net.embed, htilde));
  Var<S> pooled = group_sum_rows(embedded, static_cast<std::size_t>(n_agents));
  Var<S> cat = concat_cols<S>({pooled, state});
  Var<S> t1 = relu(apply_linear(bound, net.trunk1, cat));
  Var<S> t2 = relu(apply_linear(bound, net.trunk2, t1));
  return apply_linear(bound, net.out, t2);
}

// ---- batch input assembly ---------------------------------------------------

// Rows are ordered (b * n_agents + a); this canonical agent ordering is what
// makes the value network's pooling exactly permutation invariant.
template <typename S>
Tensor<S> assemble_trunk_inputs(const EpisodeBatch<S>& batch, int t, const ModelDims& d) {
  int rows = batch.batch * batch.n_agents;
  Tensor<S> in(Shape{static_cast<std::size_t>(rows), static_cast<std::size_t>(d.adv_in())});
  for (int b = 0; b < batch.batch; ++b)
    for (int a = 0; a < batch.n_agents; ++a) {
      int r = b * batch.n_agents + a;
      const S* obs = batch.obs.data() +
                     ((static_cast<std::size_t>(t) * batch.batch + b) * batch.n_agents + a) * batch.obs_dim;
      S* dst = in.data() + static_cast<std::size_t>(r) * d.adv_in();
      for (int k = 0; k < d.obs_dim; ++k) dst[k] = obs[k];
      if (t > 0) {
        int last = batch.action(t - 1, b, a);
        dst[d.obs_dim + last] = S(1);
      }
      dst[d.obs_dim + d.max_actions + a] = S(1);
    }
  return in;
}

// [h, o, u_last, id] rows for the value network at time t.
template <typename S>
Tensor<S> assemble_htilde(const Tensor<S>& h, const EpisodeBatch<S>& batch, int t, const ModelDims& d) {
  int rows = batch.batch * batch.n_agents;
  Tensor<S> in(Shape{static_cast<std::size_t>(rows), static_cast<std::size_t>(d.htilde_dim())});
  for (int b = 0; b < batch.batch; ++b)
    for (int a = 0; a < batch.n_agents; ++a) {
      int r = b * batch.n_agents + a;
      S* dst = in.data() + static_cast<std::size_t>(r) * d.htilde_dim();
      const S* hsrc = h.data() + static_cast<std::size_t>(r) * d.hidden;
      for (int k = 0; k < d.hidden; ++k) dst[k] = hsrc[k];
      const S* obs = batch.obs.data() +
                     ((static_cast<std::size_t>(t) * batch.batch + b) * batch.n_agents + a) * batch.obs_dim;
      for (int k = 0; k < d.obs_dim; ++k) dst[d.hidden + k] = obs[k];
      if (t > 0) {
        int last = batch.action(t - 1, b, a);
        dst[d.hidden + d.obs_dim + last] = S(1);
      }
      dst[d.hidden + d.obs_dim + d.max_actions + a] = S(1);
    }
  return in;
}

// Valid-action count per stacked row, repeating the per-agent action set
// sizes across the batch.
inline std::vector<std::size_t> row_valid_actions(const ModelDims& d, int batch) {
  std::vector<std::size_t> valid(static_cast<std::size_t>(batch) * d.n_agents);
  for (int b = 0; b < batch; ++b)
    for (int a = 0; a < d.n_agents; ++a) valid[b * d.n_agents + a] = static_cast<std::size_t>(d.n_actions[a]);
  return valid;
}

template <typename S>
struct TrunkUnroll {
  std::vector<Var<S>> out;  // t = 0..T
  std::vector<Var<S>> h;    // t = 0..T, state after consuming o_t
};

// Unrolls the shared trunk over the padded batch for t = 0..last_t. Hidden
// states start at zero and are recomputed from scratch every time. last_t of
// -1 covers every step any loss or bootstrap target can touch.
template <typename S>
TrunkUnroll<S> unroll_trunk(Tape<S>& tape, const Bound<S>& bound, const TrunkSpec& net, const EpisodeBatch<S>& batch,
                            const ModelDims& d, bool mean_constraint, int last_t = -1) {
  if (last_t < 0) last_t = std::max(batch.t_max - 1, batch.bootstrap_end);
  TrunkUnroll<S> result;
  std::vector<std::size_t> valid = row_valid_actions(d, batch.batch);
  Var<S> h = tape.constant(
      Tensor<S>::zeros({static_cast<std::size_t>(batch.batch * batch.n_agents), static_cast<std::size_t>(d.hidden)}));
  for (int t = 0; t <= last_t; ++t) {
    Var<S> input = tape.constant(assemble_trunk_inputs(batch, t, d));
    TrunkStep<S> step = trunk_step(bound, net, input, h, mean_constraint, valid);
    h = step.h;
    result.out.push_back(step.out);
    result.h.push_back(step.h);
  }
  return result;
}

}  // namespace lan
