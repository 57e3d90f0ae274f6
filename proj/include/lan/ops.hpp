#pragma once

// Differentiable operations on tape variables. Each op computes its value
// with the kernels from tensor.hpp and registers a closure that accumulates
// exact adjoints into its parents.

#include <vector>

#include "lan/tape.hpp"
#include "lan/tensor.hpp"

namespace lan {

namespace detail {
template <typename S>
inline Tape<S>& same_tape(Var<S> a, Var<S> b, const char* op) {
  if (a.tape() != b.tape()) throw ContractError(std::string(op) + ": operands live on different tapes");
  return *a.tape();
}
}  // namespace detail

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Tape<S>& t = detail::same_tape(a, b, "matmul");
  Tensor<S> out = matmul(a.value(), b.value());
  std::uint32_t pa = a.node(), pb = b.node();
  return t.emit(std::move(out), {pa, pb},
                [pa, pb](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  const Tensor<S>& av = tp.value_of(pa);
                  const Tensor<S>& bv = tp.value_of(pb);
                  std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
                  detail::gemm_nt(g.data(), bv.data(), tp.grad_buf(pa).data(), m, n, k, true);
                  detail::gemm_tn(av.data(), g.data(), tp.grad_buf(pb).data(), k, m, n, true);
                },
                "matmul");
}

template <typename S>
Var<S> transpose(Var<S> a) {
  Tape<S>& t = *a.tape();
  std::uint32_t pa = a.node();
  return t.emit(transpose(a.value()), {pa},
                [pa](Tape<S>& tp, std::uint32_t self) {
                  Tensor<S> gt = transpose(tp.grad_buf(self));
                  Tensor<S>& acc = tp.grad_buf(pa);
                  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gt[i];
                },
                "transpose");
}

// y = x * W^T + b with x[m x in], W[out x in], b[out]. Fused so the hot path
// of every layer is a single node.
template <typename S>
Var<S> linear(Var<S> x, Var<S> w, Var<S> b) {
  Tape<S>& t = detail::same_tape(x, w, "linear");
  const Tensor<S>& xv = x.value();
  const Tensor<S>& wv = w.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(1))
    throw DimensionError("linear: incompatible shapes " + shape_str(xv.shape()) + " and " + shape_str(wv.shape()));
  std::size_t m = xv.dim(0), in = xv.dim(1), out_dim = wv.dim(0);
  Tensor<S> out(Shape{m, out_dim});
  detail::gemm_nt(xv.data(), wv.data(), out.data(), m, in, out_dim, false);
  bool has_bias = b.valid();
  if (has_bias) {
    const Tensor<S>& bv = b.value();
    if (bv.size() != out_dim) throw DimensionError("linear: bias size mismatch");
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < out_dim; ++j) out.at(i, j) += bv[j];
  }
  detail::guard_finite(out, "linear");
  std::uint32_t px = x.node(), pw = w.node(), pb = has_bias ? b.node() : 0;
  std::vector<std::uint32_t> parents = {px, pw};
  if (has_bias) parents.push_back(pb);
  return t.emit(std::move(out), std::move(parents),
                [px, pw, pb, has_bias, m, in, out_dim](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  const Tensor<S>& xv2 = tp.value_of(px);
                  const Tensor<S>& wv2 = tp.value_of(pw);
                  detail::gemm_nn(g.data(), wv2.data(), tp.grad_buf(px).data(), m, out_dim, in, true);
                  detail::gemm_tn(g.data(), xv2.data(), tp.grad_buf(pw).data(), out_dim, m, in, true);
                  if (has_bias) {
                    Tensor<S>& gb = tp.grad_buf(pb);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < out_dim; ++j) gb[j] += g.at(i, j);
                  }
                },
                "linear");
}

template <typename S>
Var<S> linear(Var<S> x, Var<S> w) {
  return linear(x, w, Var<S>());
}

namespace detail {

// Shared implementation of add/sub/mul with trailing-dimension broadcast.
template <typename S>
inline Var<S> binary_op(Var<S> a, Var<S> b, const char* name, int kind) {
  Tape<S>& t = same_tape(a, b, name);
  Tensor<S> out;
  switch (kind) {
    case 0: out = add(a.value(), b.value()); break;
    case 1: out = sub(a.value(), b.value()); break;
    default: out = mul(a.value(), b.value()); break;
  }
  std::uint32_t pa = a.node(), pb = b.node();
  return t.emit(std::move(out), {pa, pb},
                [pa, pb, kind](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  const Tensor<S>& av = tp.value_of(pa);
                  const Tensor<S>& bv = tp.value_of(pb);
                  auto accumulate = [&](std::uint32_t parent, const Tensor<S>& other, bool negate, bool is_mul) {
                    Tensor<S>& acc = tp.grad_buf(parent);
                    std::size_t psz = acc.size(), osz = other.size(), gsz = g.size();
                    const S* pg = g.data();
                    const S* po = other.data();
                    S* pacc = acc.data();
                    if (psz == gsz && osz == gsz) {  // equal shapes: plain loops
                      if (is_mul) {
                        if (negate)
                          for (std::size_t i = 0; i < gsz; ++i) pacc[i] -= pg[i] * po[i];
                        else
                          for (std::size_t i = 0; i < gsz; ++i) pacc[i] += pg[i] * po[i];
                      } else if (negate) {
                        for (std::size_t i = 0; i < gsz; ++i) pacc[i] -= pg[i];
                      } else {
                        for (std::size_t i = 0; i < gsz; ++i) pacc[i] += pg[i];
                      }
                      return;
                    }
                    for (std::size_t i = 0; i < gsz; ++i) {  // rare broadcast path
                      S gi = pg[i];
                      if (is_mul) gi *= po[osz == gsz ? i : i % osz];
                      if (negate) gi = -gi;
                      pacc[psz == gsz ? i : i % psz] += gi;
                    }
                  };
                  if (kind == 2) {
                    accumulate(pa, bv, false, true);
                    accumulate(pb, av, false, true);
                  } else {
                    accumulate(pa, bv, false, false);
                    accumulate(pb, av, kind == 1, false);
                  }
                },
                name);
}

template <typename S, typename FwdF, typename DerivF>
inline Var<S> unary_from_output(Var<S> x, FwdF fwd, DerivF dfy, const char* name) {
  Tape<S>& t = *x.tape();
  std::uint32_t px = x.node();
  return t.emit(fwd(x.value()), {px},
                [px, dfy](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  const Tensor<S>& y = tp.value_of(self);
                  const Tensor<S>& xv = tp.value_of(px);
                  Tensor<S>& acc = tp.grad_buf(px);
                  for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * dfy(xv[i], y[i]);
                },
                name);
}

}  // namespace detail

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  return detail::binary_op(a, b, "add", 0);
}
template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  return detail::binary_op(a, b, "sub", 1);
}
template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  return detail::binary_op(a, b, "mul", 2);
}

template <typename S>
Var<S> relu(Var<S> x) {
  return detail::unary_from_output<S>(
      x, [](const Tensor<S>& v) { return relu(v); },
      [](S xi, S) { return xi > S(0) ? S(1) : S(0); }, "relu");
}

template <typename S>
Var<S> sigmoid(Var<S> x) {
  return detail::unary_from_output<S>(
      x, [](const Tensor<S>& v) { return sigmoid(v); },
      [](S, S yi) { return yi * (S(1) - yi); }, "sigmoid");
}

template <typename S>
Var<S> tanh(Var<S> x) {
  return detail::unary_from_output<S>(
      x, [](const Tensor<S>& v) { return tanh(v); },
      [](S, S yi) { return S(1) - yi * yi; }, "tanh");
}

template <typename S>
Var<S> scale(Var<S> x, S c) {
  return detail::unary_from_output<S>(
      x, [c](const Tensor<S>& v) { return scale(v, c); },
      [c](S, S) { return c; }, "scale");
}

template <typename S>
Var<S> add_scalar(Var<S> x, S c) {
  return detail::unary_from_output<S>(
      x, [c](const Tensor<S>& v) { return add_scalar(v, c); },
      [](S, S) { return S(1); }, "add_scalar");
}

template <typename S>
Var<S> sum(Var<S> x, std::size_t axis) {
  Tape<S>& t = *x.tape();
  std::uint32_t px = x.node();
  return t.emit(sum(x.value(), axis), {px},
                [px, axis](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  Tensor<S>& acc = tp.grad_buf(px);
                  const Tensor<S>& xv = tp.value_of(px);
                  std::size_t inner = 1;
                  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
                  std::size_t n_axis = xv.dim(axis);
                  std::size_t outer = xv.size() / (inner * n_axis);
                  for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t k = 0; k < n_axis; ++k)
                      for (std::size_t in = 0; in < inner; ++in)
                        acc[(o * n_axis + k) * inner + in] += g[o * inner + in];
                },
                "sum");
}

template <typename S>
Var<S> mean(Var<S> x, std::size_t axis) {
  S inv = S(1) / static_cast<S>(x.value().dim(axis));
  return scale(sum(x, axis), inv);
}

// Max along an axis; the subgradient routes to the lowest maximizing index,
// matching the argmax tie rule.
template <typename S>
Var<S> max(Var<S> x, std::size_t axis) {
  Tape<S>& t = *x.tape();
  std::uint32_t px = x.node();
  return t.emit(max(x.value(), axis), {px},
                [px, axis](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  const Tensor<S>& xv = tp.value_of(px);
                  Tensor<S> idx = argmax(xv, axis);
                  Tensor<S>& acc = tp.grad_buf(px);
                  std::size_t inner = 1;
                  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
                  std::size_t n_axis = xv.dim(axis);
                  std::size_t outer = xv.size() / (inner * n_axis);
                  for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t in = 0; in < inner; ++in) {
                      std::size_t oi = o * inner + in;
                      std::size_t k = static_cast<std::size_t>(idx[oi]);
                      acc[(o * n_axis + k) * inner + in] += g[oi];
                    }
                },
                "max");
}

template <typename S>
Var<S> sum_all(Var<S> x) {
  Tape<S>& t = *x.tape();
  std::uint32_t px = x.node();
  Tensor<S> out(Shape{1});
  out[0] = sum_all(x.value());
  detail::guard_finite(out, "sum_all");
  return t.emit(std::move(out), {px},
                [px](Tape<S>& tp, std::uint32_t self) {
                  S g = tp.grad_buf(self)[0];
                  Tensor<S>& acc = tp.grad_buf(px);
                  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g;
                },
                "sum_all");
}

template <typename S>
Var<S> mean_all(Var<S> x) {
  return scale(sum_all(x), S(1) / static_cast<S>(x.value().size()));
}

template <typename S>
Var<S> reshape(Var<S> x, Shape shape) {
  Tape<S>& t = *x.tape();
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != x.value().size()) throw DimensionError("reshape: size mismatch");
  Tensor<S> out(shape);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.value()[i];
  std::uint32_t px = x.node();
  return t.emit(std::move(out), {px},
                [px](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  Tensor<S>& acc = tp.grad_buf(px);
                  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
                },
                "reshape");
}

// out[r] = x[r, idx[r]] for a rank-2 x; used to pick the taken action's
// entry out of each row.
template <typename S>
Var<S> gather_cols(Var<S> x, std::vector<std::size_t> idx) {
  Tape<S>& t = *x.tape();
  const Tensor<S>& xv = x.value();
  if (xv.rank() != 2 || idx.size() != xv.dim(0)) throw DimensionError("gather_cols: bad index vector");
  Tensor<S> out(Shape{idx.size()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= xv.dim(1)) throw ContractError("gather_cols: index out of range");
    out[r] = xv.at(r, idx[r]);
  }
  std::uint32_t px = x.node();
  return t.emit(std::move(out), {px},
                [px, idx = std::move(idx)](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  Tensor<S>& acc = tp.grad_buf(px);
                  std::size_t cols = tp.value_of(px).dim(1);
                  for (std::size_t r = 0; r < idx.size(); ++r) acc[r * cols + idx[r]] += g[r];
                },
                "gather_cols");
}

// Concatenates rank-2 tensors with equal row counts along columns.
template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: empty input");
  Tape<S>& t = *parts[0].tape();
  std::size_t rows = parts[0].value().dim(0);
  std::size_t cols = 0;
  for (const Var<S>& p : parts) {
    if (p.value().rank() != 2 || p.value().dim(0) != rows)
      throw DimensionError("concat_cols: row count mismatch");
    cols += p.value().dim(1);
  }
  Tensor<S> out(Shape{rows, cols});
  std::size_t off = 0;
  std::vector<std::uint32_t> idx;
  std::vector<std::size_t> widths;
  for (const Var<S>& p : parts) {
    const Tensor<S>& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.dim(1); ++c) out.at(r, off + c) = v.at(r, c);
    idx.push_back(p.node());
    widths.push_back(v.dim(1));
    off += v.dim(1);
  }
  return t.emit(std::move(out), idx,
                [idx, widths, rows, cols](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  std::size_t off2 = 0;
                  for (std::size_t p = 0; p < idx.size(); ++p) {
                    Tensor<S>& acc = tp.grad_buf(idx[p]);
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t c = 0; c < widths[p]; ++c) acc[r * widths[p] + c] += g[r * cols + off2 + c];
                    off2 += widths[p];
                  }
                },
                "concat_cols");
}

// y[b, :] = sum over a of x[b * group + a, :]. The permutation-invariant
// pooling used by the centralized value network.
template <typename S>
Var<S> group_sum_rows(Var<S> x, std::size_t group) {
  Tape<S>& t = *x.tape();
  const Tensor<S>& xv = x.value();
  if (xv.rank() != 2 || xv.dim(0) % group != 0) throw DimensionError("group_sum_rows: rows not divisible by group");
  std::size_t out_rows = xv.dim(0) / group, cols = xv.dim(1);
  Tensor<S> out(Shape{out_rows, cols});
  for (std::size_t b = 0; b < out_rows; ++b)
    for (std::size_t a = 0; a < group; ++a)
      for (std::size_t c = 0; c < cols; ++c) out.at(b, c) += xv.at(b * group + a, c);
  detail::guard_finite(out, "group_sum_rows");
  std::uint32_t px = x.node();
  return t.emit(std::move(out), {px},
                [px, group, out_rows, cols](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  Tensor<S>& acc = tp.grad_buf(px);
                  for (std::size_t b = 0; b < out_rows; ++b)
                    for (std::size_t a = 0; a < group; ++a)
                      for (std::size_t c = 0; c < cols; ++c) acc[(b * group + a) * cols + c] += g[b * cols + c];
                },
                "group_sum_rows");
}

// y[b * group + a, :] = x[b, :]; adjoint of group_sum_rows.
template <typename S>
Var<S> expand_rows(Var<S> x, std::size_t group) {
  Tape<S>& t = *x.tape();
  const Tensor<S>& xv = x.value();
  if (xv.rank() != 2) throw DimensionError("expand_rows: rank-2 tensor required");
  std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor<S> out(Shape{rows * group, cols});
  for (std::size_t b = 0; b < rows; ++b)
    for (std::size_t a = 0; a < group; ++a)
      for (std::size_t c = 0; c < cols; ++c) out.at(b * group + a, c) = xv.at(b, c);
  std::uint32_t px = x.node();
  return t.emit(std::move(out), {px},
                [px, group, rows, cols](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  Tensor<S>& acc = tp.grad_buf(px);
                  for (std::size_t b = 0; b < rows; ++b)
                    for (std::size_t a = 0; a < group; ++a)
                      for (std::size_t c = 0; c < cols; ++c) acc[b * cols + c] += g[(b * group + a) * cols + c];
                },
                "expand_rows");
}

// out[r, :] = x[r, :] - mean over the valid columns of row r, where valid[r]
// gives the number of leading valid columns. Rows keep their shape; entries
// past the valid prefix are shifted too (they are never read downstream).
template <typename S>
Var<S> sub_row_mean(Var<S> x, std::vector<std::size_t> valid) {
  Tape<S>& t = *x.tape();
  const Tensor<S>& xv = x.value();
  if (xv.rank() != 2 || valid.size() != xv.dim(0)) throw DimensionError("sub_row_mean: bad valid vector");
  std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor<S> out(Shape{rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    S m = 0;
    for (std::size_t c = 0; c < valid[r]; ++c) m += xv.at(r, c);
    m /= static_cast<S>(valid[r]);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = xv.at(r, c) - m;
  }
  detail::guard_finite(out, "sub_row_mean");
  std::uint32_t px = x.node();
  return t.emit(std::move(out), {px},
                [px, valid = std::move(valid), rows, cols](Tape<S>& tp, std::uint32_t self) {
                  const Tensor<S>& g = tp.grad_buf(self);
                  Tensor<S>& acc = tp.grad_buf(px);
                  for (std::size_t r = 0; r < rows; ++r) {
                    S gsum = 0;
                    for (std::size_t c = 0; c < cols; ++c) gsum += g[r * cols + c];
                    S share = gsum / static_cast<S>(valid[r]);
                    for (std::size_t c = 0; c < cols; ++c) {
                      S gi = g[r * cols + c];
                      if (c < valid[r]) gi -= share;
                      acc[r * cols + c] += gi;
                    }
                  }
                },
                "sub_row_mean");
}

// Copies the value onto the tape as a constant: gradients stop here.
template <typename S>
Var<S> stop_gradient(Var<S> x) {
  return x.tape()->constant(x.value());
}

}  // namespace lan
