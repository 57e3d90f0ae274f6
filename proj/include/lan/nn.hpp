#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lan/ops.hpp"
#include "lan/rng.hpp"
#include "lan/tape.hpp"
#include "lan/tensor.hpp"

namespace lan {

// Named, ordered collection of trainable tensors. The entry order is the
// canonical order used by binding, the optimizer and checkpoints.
template <typename S>
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor<S> value;
    std::uint64_t id;
  };

  std::size_t add(std::string name, Shape shape) {
    entries_.push_back(Entry{std::move(name), Tensor<S>::zeros(std::move(shape)), next_id_++});
    return entries_.size() - 1;
  }

  std::size_t count() const { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Tensor<S>& value(std::size_t i) { return entries_[i].value; }
  const Tensor<S>& value(std::size_t i) const { return entries_[i].value; }

  // Total number of scalar parameters.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.size();
    return n;
  }

  // Copies all values from another set (shapes must match; used for target
  // network synchronization).
  void copy_values_from(const ParamSet& other) {
    if (other.entries_.size() != entries_.size()) throw ContractError("param set size mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!entries_[i].value.same_shape(other.entries_[i].value))
        throw DimensionError("param shape mismatch for " + entries_[i].name);
      entries_[i].value = other.entries_[i].value;
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::uint64_t next_id_ = 1;
};

// Per-tape binding of a ParamSet: leaf vars aligned with entry order.
template <typename S>
struct Bound {
  std::vector<Var<S>> vars;
  Var<S> operator[](std::size_t i) const { return vars[i]; }
};

template <typename S>
Bound<S> bind(Tape<S>& tape, const ParamSet<S>& params) {
  Bound<S> b;
  b.vars.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) b.vars.push_back(tape.leaf(params.value(i), params.entry(i).id));
  return b;
}

// ---- layers ---------------------------------------------------------------

struct LinearSpec {
  std::size_t w = 0, b = 0;
  std::size_t in = 0, out = 0;
};

template <typename S>
LinearSpec add_linear(ParamSet<S>& p, const std::string& name, std::size_t in, std::size_t out) {
  LinearSpec spec;
  spec.in = in;
  spec.out = out;
  spec.w = p.add(name + ".w", Shape{out, in});
  spec.b = p.add(name + ".b", Shape{out});
  return spec;
}

template <typename S>
Var<S> apply_linear(const Bound<S>& bound, const LinearSpec& spec, Var<S> x) {
  return linear(x, bound[spec.w], bound[spec.b]);
}

struct GruSpec {
  std::size_t wz = 0, wr = 0, wh = 0;
  std::size_t uz = 0, ur = 0, uh = 0;
  std::size_t bz = 0, br = 0, bh = 0;
  std::size_t in = 0, hidden = 0;
};

template <typename S>
GruSpec add_gru(ParamSet<S>& p, const std::string& name, std::size_t in, std::size_t hidden) {
  GruSpec g;
  g.in = in;
  g.hidden = hidden;
  g.wz = p.add(name + ".wz", Shape{hidden, in});
  g.wr = p.add(name + ".wr", Shape{hidden, in});
  g.wh = p.add(name + ".wh", Shape{hidden, in});
  g.uz = p.add(name + ".uz", Shape{hidden, hidden});
  g.ur = p.add(name + ".ur", Shape{hidden, hidden});
  g.uh = p.add(name + ".uh", Shape{hidden, hidden});
  g.bz = p.add(name + ".bz", Shape{hidden});
  g.br = p.add(name + ".br", Shape{hidden});
  g.bh = p.add(name + ".bh", Shape{hidden});
  return g;
}

// One GRU step:
//   z = sigmoid(x Wz^T + h Uz^T + bz)
//   r = sigmoid(x Wr^T + h Ur^T + br)
//   hcand = tanh(x Wh^T + (r o h) Uh^T + bh)
//   h' = (1 - z) o h + z o hcand
template <typename S>
Var<S> gru_step(const Bound<S>& bound, const GruSpec& g, Var<S> x, Var<S> h_prev) {
  if (x.value().rank() != 2 || h_prev.value().rank() != 2 || x.value().dim(0) != h_prev.value().dim(0) ||
      x.value().dim(1) != g.in || h_prev.value().dim(1) != g.hidden)
    throw DimensionError("gru_step: input " + shape_str(x.value().shape()) + " / hidden " +
                         shape_str(h_prev.value().shape()) + " incompatible with cell");
  Var<S> z = sigmoid(add(linear(x, bound[g.wz], bound[g.bz]), linear(h_prev, bound[g.uz])));
  Var<S> r = sigmoid(add(linear(x, bound[g.wr], bound[g.br]), linear(h_prev, bound[g.ur])));
  Var<S> hcand = tanh(add(linear(x, bound[g.wh], bound[g.bh]), linear(mul(r, h_prev), bound[g.uh])));
  // h - z o h + z o hcand
  return add(sub(h_prev, mul(z, h_prev)), mul(z, hcand));
}

// ---- initialization --------------------------------------------------------

// Square orthogonal matrix via modified Gram-Schmidt on a Gaussian draw,
// computed in double precision.
inline std::vector<double> orthogonal_square(std::size_t n, Rng& rng) {
  std::vector<double> m(n * n);
  for (double& v : m) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = m.data() + i * n;
    for (std::size_t j = 0; j < i; ++j) {
      const double* prev = m.data() + j * n;
      double dot = 0;
      for (std::size_t k = 0; k < n; ++k) dot += row[k] * prev[k];
      for (std::size_t k = 0; k < n; ++k) row[k] -= dot * prev[k];
    }
    double norm = 0;
    for (std::size_t k = 0; k < n; ++k) norm += row[k] * row[k];
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // degenerate draw; replace with a unit basis vector and redo the row
      for (std::size_t k = 0; k < n; ++k) row[k] = (k == i % n) ? 1.0 : 0.0;
      --i;
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) row[k] /= norm;
  }
  return m;
}

// Weights ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), bias zero.
template <typename S>
void init_linear(ParamSet<S>& p, const LinearSpec& spec, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(spec.in));
  Tensor<S>& w = p.value(spec.w);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<S>(rng.uniform(-bound, bound));
  Tensor<S>& b = p.value(spec.b);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = S(0);
}

// Input weights uniform fan-in, recurrent weights orthogonal, biases zero.
template <typename S>
void init_gru(ParamSet<S>& p, const GruSpec& g, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(g.in));
  for (std::size_t idx : {g.wz, g.wr, g.wh}) {
    Tensor<S>& w = p.value(idx);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<S>(rng.uniform(-bound, bound));
  }
  for (std::size_t idx : {g.uz, g.ur, g.uh}) {
    std::vector<double> q = orthogonal_square(g.hidden, rng);
    Tensor<S>& u = p.value(idx);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = static_cast<S>(q[i]);
  }
  for (std::size_t idx : {g.bz, g.br, g.bh}) {
    Tensor<S>& b = p.value(idx);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = S(0);
  }
}

// ---- gradient clipping and Adam --------------------------------------------

struct ClipResult {
  double pre_norm = 0;
  bool clipped = false;
};

// Scales all gradients by max_norm / ||g|| when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
template <typename S>
ClipResult clip_global_norm(Gradients<S>& grads, double max_norm) {
  if (!(max_norm > 0)) throw ContractError("clip_global_norm: max_norm must be positive");
  double sq = 0;
  for (auto& [id, g] : grads.items) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      double v = static_cast<double>(g[i]);
      if (!std::isfinite(v)) throw NumericFault("clip_global_norm: non-finite gradient");
      sq += v * v;
    }
  }
  ClipResult res;
  res.pre_norm = std::sqrt(sq);
  if (res.pre_norm > max_norm) {
    S factor = static_cast<S>(max_norm / res.pre_norm);
    for (auto& [id, g] : grads.items)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= factor;
    res.clipped = true;
  }
  return res;
}

// Adam with bias correction. Moment buffers are aligned with the ParamSet
// entry order; the same optimizer instance must always be applied to the
// same set.
template <typename S>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamSet<S>& params, const Gradients<S>& grads) {
    if (m_.empty()) {
      for (std::size_t i = 0; i < params.count(); ++i) {
        m_.push_back(Tensor<S>::zeros(params.value(i).shape()));
        v_.push_back(Tensor<S>::zeros(params.value(i).shape()));
      }
    }
    if (grads.items.size() != params.count()) throw DimensionError("adam: gradient/param count mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.count(); ++i) {
      const Tensor<S>& g = grads.items[i].second;
      Tensor<S>& p = params.value(i);
      if (!g.same_shape(p)) throw DimensionError("adam: gradient shape mismatch for " + params.entry(i).name);
      Tensor<S>& m = m_[i];
      Tensor<S>& v = v_[i];
      const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
      const S one_minus_b1 = static_cast<S>(1.0 - beta1_), one_minus_b2 = static_cast<S>(1.0 - beta2_);
      const S step_size = static_cast<S>(lr_ / bc1);
      const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
      const S eps = static_cast<S>(eps_);
      const S* pg = g.data();
      S* pm = m.data();
      S* pv = v.data();
      S* pp = p.data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        S gk = pg[k];
        pm[k] = b1 * pm[k] + one_minus_b1 * gk;
        pv[k] = b2 * pv[k] + one_minus_b2 * gk * gk;
        pp[k] -= step_size * pm[k] / (std::sqrt(pv[k]) * inv_sqrt_bc2 + eps);
      }
      detail::guard_finite(p, "adam");
    }
  }

  long step_count() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor<S>> m_, v_;
};

}  // namespace lan
