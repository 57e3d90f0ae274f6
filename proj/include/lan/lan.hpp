#pragma once

// Local advantage networks: a shared recurrent advantage function per agent
// plus a centralized value over the summed hidden-state embeddings. Both are
// trained together through the per-agent Q proxy  Q~_a = V + A_a  with
// double-DQN targets from delayed copies of both networks.

#include <vector>

#include "lan/learner.hpp"
#include "lan/nets.hpp"

namespace lan {

// Q proxy for one history: the centralized value broadcast over the local
// advantage vector. Adding a constant never changes the argmax, which is
// what makes greedy execution decentralizable.
template <typename S>
Tensor<S> q_proxy(S value, const Tensor<S>& advantages) {
  return add_scalar(advantages, value);
}

struct LanFlags {
  bool mean_constraint = false;     // zero-mean advantage heads
  bool stop_value_h_grad = false;   // cut the value-loss gradient at h_a
  bool check_decentralization = false;  // verify argmax(Q~) == argmax(A) per batch
  bool check_zero_mean = false;     // verify every advantage row has mean ~0
};

// Binds only the listed entries; the rest stay invalid (never referenced by
// the forward pass that requested the subset).
template <typename S>
Bound<S> bind_subset(Tape<S>& tape, const ParamSet<S>& params, const std::vector<std::size_t>& indices) {
  Bound<S> b;
  b.vars.resize(params.count());
  for (std::size_t i : indices) b.vars[i] = tape.leaf(params.value(i), params.entry(i).id);
  return b;
}

template <typename S>
struct LanTargets {
  int t_steps = 0, batch = 0, n_agents = 0;
  std::vector<S> y;  // (t*B + b)*A + a

  S at(int t, int b, int a) const { return y[(static_cast<std::size_t>(t) * batch + b) * n_agents + a]; }
};

template <typename S>
struct LossGrads {
  double loss = 0;
  Gradients<S> grads;
};

template <typename S>
class LanLearner : public Learner<S> {
 public:
  LanLearner(ModelDims dims, double gamma, double lr, double clip_norm, LanFlags flags, Rng init_rng)
      : dims_(std::move(dims)), gamma_(gamma), clip_norm_(clip_norm), flags_(flags), opt_(lr) {
    trunk_ = add_trunk(online_, "adv", dims_);
    value_ = add_value_net(online_, "value", dims_);
    add_trunk(target_, "adv", dims_);
    add_value_net(target_, "value", dims_);
    init_trunk(online_, trunk_, init_rng);
    init_value_net(online_, value_, init_rng);
    target_.copy_values_from(online_);
    trunk_indices_ = collect_trunk_indices();
  }

  const char* algorithm() const override { return "lan"; }
  const ModelDims& dims() const override { return dims_; }
  ParamSet<S>& online_params() override { return online_; }
  const ParamSet<S>& online_params() const override { return online_; }
  ParamSet<S>& target_params() { return target_; }
  const LanFlags& flags() const { return flags_; }

  void sync_targets() override { target_.copy_values_from(online_); }

  // ---- decentralized execution ---------------------------------------------

  ActResult<S> act(const std::vector<std::vector<double>>& obs, const std::vector<int>& last_actions,
                   const Tensor<S>& hidden, double epsilon, Rng& rng) const override {
    int A = dims_.n_agents;
    Tensor<S> input(Shape{static_cast<std::size_t>(A), static_cast<std::size_t>(dims_.adv_in())});
    for (int a = 0; a < A; ++a) {
      S* dst = input.data() + static_cast<std::size_t>(a) * dims_.adv_in();
      for (int k = 0; k < dims_.obs_dim; ++k) dst[k] = static_cast<S>(obs[a][k]);
      if (last_actions[a] >= 0) dst[dims_.obs_dim + last_actions[a]] = S(1);
      dst[dims_.obs_dim + dims_.max_actions + a] = S(1);
    }
    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound = bind_subset(tape, online_, trunk_indices_);
    std::vector<std::size_t> valid;
    for (int a = 0; a < A; ++a) valid.push_back(static_cast<std::size_t>(dims_.n_actions[a]));
    TrunkStep<S> step =
        trunk_step(bound, trunk_, tape.constant(std::move(input)),
                   tape.constant(hidden), flags_.mean_constraint, valid);
    ActResult<S> out;
    out.hidden = step.h.value();
    const Tensor<S>& adv = step.out.value();
    if (flags_.check_zero_mean) {
      for (int a = 0; a < A; ++a) {
        double m = 0;
        for (int u = 0; u < dims_.n_actions[a]; ++u) m += adv.at(a, u);
        if (std::fabs(m / dims_.n_actions[a]) > 1e-6)
          throw NumericFault("advantage row mean exceeds 1e-6 under the mean constraint");
      }
    }
    for (int a = 0; a < A; ++a) {
      int action;
      if (rng.uniform() < epsilon)
        action = rng.uniform_int(dims_.n_actions[a]);
      else
        action = static_cast<int>(argmax_prefix(adv.data() + static_cast<std::size_t>(a) * dims_.max_actions,
                                                static_cast<std::size_t>(dims_.n_actions[a])));
      out.actions.push_back(action);
    }
    return out;
  }

  // Single-row advantage head, exposed for inspection: returns the advantage
  // vector over the agent's actions and the next hidden state.
  struct AdvOut {
    Tensor<S> advantages;  // [max_actions]
    Tensor<S> h_next;      // [1 x hidden]
  };
  AdvOut advantage_forward(const std::vector<double>& obs, int last_action, int agent_id,
                           const Tensor<S>& h_prev) const {
    Tensor<S> input(Shape{1, static_cast<std::size_t>(dims_.adv_in())});
    for (int k = 0; k < dims_.obs_dim; ++k) input[k] = static_cast<S>(obs[k]);
    if (last_action >= 0) input[dims_.obs_dim + last_action] = S(1);
    input[dims_.obs_dim + dims_.max_actions + agent_id] = S(1);
    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound = bind_subset(tape, online_, trunk_indices_);
    std::vector<std::size_t> valid = {static_cast<std::size_t>(dims_.n_actions[std::min(agent_id, dims_.n_agents - 1)])};
    TrunkStep<S> step = trunk_step(bound, trunk_, tape.constant(std::move(input)), tape.constant(h_prev),
                                   flags_.mean_constraint, valid);
    AdvOut out;
    out.h_next = step.h.value();
    out.advantages = Tensor<S>(Shape{static_cast<std::size_t>(dims_.max_actions)});
    for (int u = 0; u < dims_.max_actions; ++u) out.advantages[u] = step.out.value()[u];
    return out;
  }

  // Centralized value of one (state, joint history) point from per-agent
  // tuples. Rows are re-ordered by agent id before pooling, so any input
  // permutation yields bit-identical output.
  struct AgentTuple {
    Tensor<S> h;               // [1 x hidden]
    std::vector<double> obs;
    int last_action = -1;
    int agent_id = 0;
  };
  double value_forward_tuples(std::vector<AgentTuple> tuples, const std::vector<double>& state) const {
    if (static_cast<int>(tuples.size()) != dims_.n_agents)
      throw ContractError("value_forward: one tuple per agent required");
    std::sort(tuples.begin(), tuples.end(),
              [](const AgentTuple& x, const AgentTuple& y) { return x.agent_id < y.agent_id; });
    Tensor<S> htilde(Shape{static_cast<std::size_t>(dims_.n_agents), static_cast<std::size_t>(dims_.htilde_dim())});
    for (int a = 0; a < dims_.n_agents; ++a) {
      const AgentTuple& tup = tuples[a];
      S* dst = htilde.data() + static_cast<std::size_t>(a) * dims_.htilde_dim();
      for (int k = 0; k < dims_.hidden; ++k) dst[k] = tup.h[k];
      for (int k = 0; k < dims_.obs_dim; ++k) dst[dims_.hidden + k] = static_cast<S>(tup.obs[k]);
      if (tup.last_action >= 0) dst[dims_.hidden + dims_.obs_dim + tup.last_action] = S(1);
      dst[dims_.hidden + dims_.obs_dim + dims_.max_actions + tup.agent_id] = S(1);
    }
    Tensor<S> state_row(Shape{1, static_cast<std::size_t>(dims_.state_dim)});
    for (int k = 0; k < dims_.state_dim; ++k) state_row[k] = static_cast<S>(state[k]);
    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound = bind(tape, online_);
    Var<S> v = value_forward(bound, value_, tape.constant(std::move(htilde)), tape.constant(std::move(state_row)),
                             dims_.n_agents);
    return static_cast<double>(v.value()[0]);
  }

  // ---- targets and loss -----------------------------------------------------

  // Double-DQN targets: the next action is chosen by the online advantages
  // and evaluated by the target networks (hidden states recomputed by
  // unrolling both from t = 0). True terminals do not bootstrap; time-limit
  // truncations do.
  LanTargets<S> compute_targets(const EpisodeBatch<S>& batch) const {
    if (batch.bootstrap_end == 0) return targets_impl(batch, nullptr);
    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound_on = bind_subset(tape, online_, trunk_indices_);
    TrunkUnroll<S> on =
        unroll_trunk(tape, bound_on, trunk_, batch, dims_, flags_.mean_constraint, batch.bootstrap_end);
    return targets_impl(batch, &on);
  }

  // Joint TD loss over the Q proxy, mean over valid (episode, step, agent)
  // terms. Gradients flow into both the advantage and value parameters.
  // register_target_leaves additionally exposes the (unused) target
  // parameters as leaves so their zero gradients can be checked.
  LossGrads<S> td_loss(const EpisodeBatch<S>& batch, bool register_target_leaves = false) const {
    int B = batch.batch, A = batch.n_agents, T = batch.t_max;

    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound = bind(tape, online_);
    if (register_target_leaves) bind(tape, target_);
    TrunkUnroll<S> on = unroll_trunk(tape, bound, trunk_, batch, dims_, flags_.mean_constraint);
    // the online unroll doubles as the double-DQN action selector
    LanTargets<S> targets = targets_impl(batch, &on);

    double count = 0;
    for (int t = 0; t < T; ++t)
      for (int b = 0; b < B; ++b) count += static_cast<double>(batch.mask_at(t, b)) * A;
    if (count == 0) throw ContractError("td_loss: empty batch");

    Var<S> total;
    for (int t = 0; t < T; ++t) {
      Var<S> h_for_value = flags_.stop_value_h_grad ? stop_gradient(on.h[t]) : on.h[t];
      // htilde must be differentiable through h: concat the pieces on-tape
      Var<S> rest = tape.constant(assemble_htilde_rest(batch, t));
      Var<S> htilde = concat_cols<S>({h_for_value, rest});
      Var<S> v = value_forward(bound, value_, htilde, tape.constant(batch.state_at(t)), A);  // [B x 1]
      Var<S> v_rows = reshape(expand_rows(v, static_cast<std::size_t>(A)),
                              Shape{static_cast<std::size_t>(B) * A});
      std::vector<std::size_t> taken;
      taken.reserve(static_cast<std::size_t>(B) * A);
      for (int b = 0; b < B; ++b)
        for (int a = 0; a < A; ++a) taken.push_back(static_cast<std::size_t>(batch.action(t, b, a)));
      Var<S> q = add(gather_cols(on.out[t], std::move(taken)), v_rows);

      Tensor<S> y_row(Shape{static_cast<std::size_t>(B) * A});
      Tensor<S> mask_row(Shape{static_cast<std::size_t>(B) * A});
      for (int b = 0; b < B; ++b)
        for (int a = 0; a < A; ++a) {
          y_row[static_cast<std::size_t>(b) * A + a] = targets.at(t, b, a);
          mask_row[static_cast<std::size_t>(b) * A + a] = batch.mask_at(t, b);
        }
      Var<S> diff = sub(q, tape.constant(std::move(y_row)));
      Var<S> masked = mul(mul(diff, diff), tape.constant(std::move(mask_row)));
      Var<S> part = sum_all(masked);
      total = total.valid() ? add(total, part) : part;

      if (flags_.check_decentralization) check_decentralization(on.out[t].value(), v.value(), batch, t);
      if (flags_.check_zero_mean) check_zero_mean(on.out[t].value(), batch);
    }
    Var<S> loss = scale(total, static_cast<S>(1.0 / count));
    LossGrads<S> out;
    out.loss = static_cast<double>(loss.value()[0]);
    if (!std::isfinite(out.loss)) throw NumericFault("td_loss: non-finite loss");
    out.grads = tape.backward(loss);
    return out;
  }

  UpdateResult update(const EpisodeBatch<S>& batch) override {
    LossGrads<S> lg = td_loss(batch);
    ClipResult clip = clip_global_norm(lg.grads, clip_norm_);
    opt_.step(online_, lg.grads);
    return {lg.loss, clip.pre_norm};
  }

  // Advantage decomposition of the targets: y_ADV = y - V_online(s_t, tau_t).
  // Diagnostic only; the joint loss already implies it.
  LanTargets<S> advantage_target_decomposition(const EpisodeBatch<S>& batch) const {
    LanTargets<S> targets = compute_targets(batch);
    std::vector<Tensor<S>> v_online = online_values(batch);
    for (int t = 0; t < targets.t_steps; ++t)
      for (int b = 0; b < targets.batch; ++b)
        for (int a = 0; a < targets.n_agents; ++a)
          targets.y[(static_cast<std::size_t>(t) * targets.batch + b) * targets.n_agents + a] -= v_online[t][b];
    return targets;
  }

  // Online V(s_t, tau_t) per (t, b); used by the decomposition and tests.
  std::vector<Tensor<S>> online_values(const EpisodeBatch<S>& batch) const {
    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound = bind(tape, online_);
    TrunkUnroll<S> on = unroll_trunk(tape, bound, trunk_, batch, dims_, flags_.mean_constraint);
    std::vector<Tensor<S>> out;
    for (int t = 0; t < batch.t_max; ++t) {
      Var<S> htilde = tape.constant(assemble_htilde(on.h[t].value(), batch, t, dims_));
      out.push_back(value_forward(bound, value_, htilde, tape.constant(batch.state_at(t)), batch.n_agents).value());
    }
    return out;
  }

  std::size_t value_param_count() const { return prefix_count("value."); }
  std::size_t advantage_param_count() const { return prefix_count("adv."); }
  long decentralization_checks() const { return decentralization_checks_; }
  long optimizer_steps() const { return opt_.step_count(); }

 private:
  // Shared target computation. online selects u* (double-DQN); it must cover
  // t = 1..bootstrap_end and may live on any tape (only values are read).
  LanTargets<S> targets_impl(const EpisodeBatch<S>& batch, const TrunkUnroll<S>* online) const {
    int B = batch.batch, A = batch.n_agents, T = batch.t_max;
    LanTargets<S> targets;
    targets.t_steps = T;
    targets.batch = B;
    targets.n_agents = A;
    targets.y.assign(static_cast<std::size_t>(T) * B * A, S(0));

    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    TrunkUnroll<S> tgt;
    std::vector<Tensor<S>> v_next(batch.bootstrap_end + 1);
    if (batch.bootstrap_end > 0) {
      Bound<S> bound_tgt = bind(tape, target_);
      tgt = unroll_trunk(tape, bound_tgt, trunk_, batch, dims_, flags_.mean_constraint, batch.bootstrap_end);
      for (int t = 1; t <= batch.bootstrap_end; ++t) {
        Var<S> htilde = tape.constant(assemble_htilde(tgt.h[t].value(), batch, t, dims_));
        Var<S> state = tape.constant(batch.state_at(t));
        v_next[t] = value_forward(bound_tgt, value_, htilde, state, A).value();
      }
    }

    for (int t = 0; t < T; ++t) {
      for (int b = 0; b < B; ++b) {
        if (batch.mask_at(t, b) == S(0)) continue;
        for (int a = 0; a < A; ++a) {
          std::size_t row = static_cast<std::size_t>(b) * A + a;
          S y;
          if (batch.terminal_at(t, b) != S(0)) {
            y = batch.reward(t, b);
          } else {
            const Tensor<S>& adv_on_next = online->out[t + 1].value();
            const Tensor<S>& adv_tgt_next = tgt.out[t + 1].value();
            std::size_t best = argmax_prefix(adv_on_next.data() + row * dims_.max_actions,
                                             static_cast<std::size_t>(dims_.n_actions[a]));
            y = batch.reward(t, b) +
                static_cast<S>(gamma_) * (v_next[t + 1][b] + adv_tgt_next.at(row, best));
          }
          targets.y[(static_cast<std::size_t>(t) * B + b) * A + a] = y;
        }
      }
    }
    return targets;
  }

  std::vector<std::size_t> collect_trunk_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < online_.count(); ++i)
      if (online_.entry(i).name.rfind("adv.", 0) == 0) idx.push_back(i);
    return idx;
  }

  std::size_t prefix_count(const std::string& prefix) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < online_.count(); ++i)
      if (online_.entry(i).name.rfind(prefix, 0) == 0) n += online_.value(i).size();
    return n;
  }

  // htilde columns after h: [obs, last-action one-hot, id one-hot].
  Tensor<S> assemble_htilde_rest(const EpisodeBatch<S>& batch, int t) const {
    int rows = batch.batch * batch.n_agents;
    int width = dims_.obs_dim + dims_.max_actions + dims_.id_dim;
    Tensor<S> rest(Shape{static_cast<std::size_t>(rows), static_cast<std::size_t>(width)});
    for (int b = 0; b < batch.batch; ++b)
      for (int a = 0; a < batch.n_agents; ++a) {
        int r = b * batch.n_agents + a;
        S* dst = rest.data() + static_cast<std::size_t>(r) * width;
        const S* obs = batch.obs.data() +
                       ((static_cast<std::size_t>(t) * batch.batch + b) * batch.n_agents + a) * batch.obs_dim;
        for (int k = 0; k < dims_.obs_dim; ++k) dst[k] = obs[k];
        if (t > 0) dst[dims_.obs_dim + batch.action(t - 1, b, a)] = S(1);
        dst[dims_.obs_dim + dims_.max_actions + a] = S(1);
      }
    return rest;
  }

  void check_zero_mean(const Tensor<S>& adv, const EpisodeBatch<S>& batch) const {
    for (int b = 0; b < batch.batch; ++b)
      for (int a = 0; a < batch.n_agents; ++a) {
        std::size_t row = static_cast<std::size_t>(b) * batch.n_agents + a;
        double m = 0;
        for (int u = 0; u < dims_.n_actions[a]; ++u) m += adv.at(row, u);
        if (std::fabs(m / dims_.n_actions[a]) > 1e-6)
          throw NumericFault("advantage row mean exceeds 1e-6 under the mean constraint");
      }
  }

  void check_decentralization(const Tensor<S>& adv, const Tensor<S>& v, const EpisodeBatch<S>& batch, int t) const {
    for (int b = 0; b < batch.batch; ++b) {
      if (batch.mask_at(t, b) == S(0)) continue;
      for (int a = 0; a < batch.n_agents; ++a) {
        std::size_t row = static_cast<std::size_t>(b) * batch.n_agents + a;
        const S* arow = adv.data() + row * dims_.max_actions;
        std::size_t n = static_cast<std::size_t>(dims_.n_actions[a]);
        std::size_t amax = argmax_prefix(arow, n);
        Tensor<S> q(Shape{n});
        for (std::size_t u = 0; u < n; ++u) q[u] = v[b] + arow[u];
        if (argmax_prefix(q.data(), n) != amax)
          throw NumericFault("decentralization identity violated (argmax Q~ != argmax A)");
        ++decentralization_checks_;
      }
    }
  }

  ModelDims dims_;
  double gamma_;
  double clip_norm_;
  LanFlags flags_;
  ParamSet<S> online_, target_;
  TrunkSpec trunk_;
  ValueSpec value_;
  std::vector<std::size_t> trunk_indices_;
  Adam<S> opt_;
  mutable long decentralization_checks_ = 0;
};

}  // namespace lan
