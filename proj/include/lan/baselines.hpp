#pragma once

// IQL and VDN on the same recurrent trunk as LAN, so comparisons isolate the
// centralized value's contribution. IQL trains each agent's Q independently;
// VDN regresses the sum of the chosen-action Q values onto a joint target.
// Both use double-DQN action selection, matching LAN.

#include <vector>

#include "lan/lan.hpp"
#include "lan/learner.hpp"
#include "lan/nets.hpp"

namespace lan {

template <typename S>
class RecurrentQLearner : public Learner<S> {
 public:
  RecurrentQLearner(ModelDims dims, double gamma, double lr, double clip_norm, bool vdn_mixing, Rng init_rng)
      : dims_(std::move(dims)), gamma_(gamma), clip_norm_(clip_norm), vdn_(vdn_mixing), opt_(lr) {
    trunk_ = add_trunk(online_, "q", dims_);
    add_trunk(target_, "q", dims_);
    init_trunk(online_, trunk_, init_rng);
    target_.copy_values_from(online_);
  }

  const char* algorithm() const override { return vdn_ ? "vdn" : "iql"; }
  const ModelDims& dims() const override { return dims_; }
  ParamSet<S>& online_params() override { return online_; }
  const ParamSet<S>& online_params() const override { return online_; }
  ParamSet<S>& target_params() { return target_; }

  void sync_targets() override { target_.copy_values_from(online_); }

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
    Bound<S> bound = bind(tape, online_);
    std::vector<std::size_t> valid;
    for (int a = 0; a < A; ++a) valid.push_back(static_cast<std::size_t>(dims_.n_actions[a]));
    TrunkStep<S> step =
        trunk_step(bound, trunk_, tape.constant(std::move(input)), tape.constant(hidden), false, valid);
    ActResult<S> out;
    out.hidden = step.h.value();
    const Tensor<S>& q = step.out.value();
    for (int a = 0; a < A; ++a) {
      int action;
      if (rng.uniform() < epsilon)
        action = rng.uniform_int(dims_.n_actions[a]);
      else
        action = static_cast<int>(argmax_prefix(q.data() + static_cast<std::size_t>(a) * dims_.max_actions,
                                                static_cast<std::size_t>(dims_.n_actions[a])));
      out.actions.push_back(action);
    }
    return out;
  }

  // Per-(t,b,a) bootstrap values r + gamma * Q_target(tau', argmax Q_online).
  LanTargets<S> compute_targets(const EpisodeBatch<S>& batch) const {
    if (batch.bootstrap_end == 0) return targets_impl(batch, nullptr);
    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound_on = bind(tape, online_);
    TrunkUnroll<S> on = unroll_trunk(tape, bound_on, trunk_, batch, dims_, false, batch.bootstrap_end);
    return targets_impl(batch, &on);
  }

  // IQL: mean over (t,b,a) of (Q_a(u_a) - y_a)^2.
  // VDN: mean over (t,b) of (sum_a Q_a(u_a) - [r + gamma * sum_a Q'_a(u*_a)])^2.
  LossGrads<S> loss(const EpisodeBatch<S>& batch) const {
    int B = batch.batch, A = batch.n_agents, T = batch.t_max;

    Tape<S> tape;
    typename Tape<S>::Scope scope(tape);
    Bound<S> bound = bind(tape, online_);
    TrunkUnroll<S> on = unroll_trunk(tape, bound, trunk_, batch, dims_, false);
    LanTargets<S> targets = targets_impl(batch, &on);

    double count = 0;
    for (int t = 0; t < T; ++t)
      for (int b = 0; b < B; ++b) count += static_cast<double>(batch.mask_at(t, b)) * (vdn_ ? 1 : A);
    if (count == 0) throw ContractError("loss: empty batch");

    Var<S> total;
    for (int t = 0; t < T; ++t) {
      std::vector<std::size_t> taken;
      taken.reserve(static_cast<std::size_t>(B) * A);
      for (int b = 0; b < B; ++b)
        for (int a = 0; a < A; ++a) taken.push_back(static_cast<std::size_t>(batch.action(t, b, a)));
      Var<S> q_taken = gather_cols(on.out[t], std::move(taken));  // [B*A]

      Var<S> diff;
      Tensor<S> mask_row;
      if (vdn_) {
        // joint TD error on the sum of the agents' chosen-action values
        Var<S> q_tot = reshape(
            group_sum_rows(reshape(q_taken, Shape{static_cast<std::size_t>(B) * A, 1}), static_cast<std::size_t>(A)),
            Shape{static_cast<std::size_t>(B)});
        Tensor<S> y_row(Shape{static_cast<std::size_t>(B)});
        mask_row = Tensor<S>(Shape{static_cast<std::size_t>(B)});
        for (int b = 0; b < B; ++b) {
          S y_sum = 0;
          if (batch.terminal_at(t, b) != S(0)) {
            y_sum = batch.reward(t, b);
          } else {
            // targets.y already holds r + gamma * Q'_a per agent; recombine
            // into the joint form r + gamma * sum_a Q'_a
            for (int a = 0; a < A; ++a) y_sum += targets.at(t, b, a);
            y_sum -= static_cast<S>(A - 1) * batch.reward(t, b);
          }
          y_row[b] = y_sum;
          mask_row[b] = batch.mask_at(t, b);
        }
        diff = sub(q_tot, tape.constant(std::move(y_row)));
      } else {
        Tensor<S> y_row(Shape{static_cast<std::size_t>(B) * A});
        mask_row = Tensor<S>(Shape{static_cast<std::size_t>(B) * A});
        for (int b = 0; b < B; ++b)
          for (int a = 0; a < A; ++a) {
            y_row[static_cast<std::size_t>(b) * A + a] = targets.at(t, b, a);
            mask_row[static_cast<std::size_t>(b) * A + a] = batch.mask_at(t, b);
          }
        diff = sub(q_taken, tape.constant(std::move(y_row)));
      }
      Var<S> masked = mul(mul(diff, diff), tape.constant(std::move(mask_row)));
      Var<S> part = sum_all(masked);
      total = total.valid() ? add(total, part) : part;
    }
    Var<S> loss_var = scale(total, static_cast<S>(1.0 / count));
    LossGrads<S> out;
    out.loss = static_cast<double>(loss_var.value()[0]);
    if (!std::isfinite(out.loss)) throw NumericFault("loss: non-finite loss");
    out.grads = tape.backward(loss_var);
    return out;
  }

  UpdateResult update(const EpisodeBatch<S>& batch) override {
    LossGrads<S> lg = loss(batch);
    ClipResult clip = clip_global_norm(lg.grads, clip_norm_);
    opt_.step(online_, lg.grads);
    return {lg.loss, clip.pre_norm};
  }

 private:
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
    if (batch.bootstrap_end > 0) {
      Bound<S> bound_tgt = bind(tape, target_);
      tgt = unroll_trunk(tape, bound_tgt, trunk_, batch, dims_, false, batch.bootstrap_end);
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
            const Tensor<S>& q_on_next = online->out[t + 1].value();
            const Tensor<S>& q_tgt_next = tgt.out[t + 1].value();
            std::size_t best = argmax_prefix(q_on_next.data() + row * dims_.max_actions,
                                             static_cast<std::size_t>(dims_.n_actions[a]));
            y = batch.reward(t, b) + static_cast<S>(gamma_) * q_tgt_next.at(row, best);
          }
          targets.y[(static_cast<std::size_t>(t) * B + b) * A + a] = y;
        }
      }
    }
    return targets;
  }

  ModelDims dims_;
  double gamma_;
  double clip_norm_;
  bool vdn_;
  ParamSet<S> online_, target_;
  TrunkSpec trunk_;
  Adam<S> opt_;
};

template <typename S>
using IqlLearner = RecurrentQLearner<S>;

}  // namespace lan
