#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lan/errors.hpp"

namespace lan {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense row-major tensor. The scalar type is a template parameter: float for
// training, double for verification (finite-difference checks run in 64-bit).
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, S fill = S(0)) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t d : shape_) {
      if (d == 0) throw DimensionError("tensor dimension must be >= 1, got shape " + shape_str(shape_));
      n *= d;
    }
    data_.assign(n, fill);
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, S v) { return Tensor(std::move(shape), v); }

  static Tensor from_vector(std::vector<S> v) {
    Tensor t;
    t.shape_ = {v.size()};
    t.data_ = std::move(v);
    if (t.data_.empty()) throw DimensionError("empty tensor");
    return t;
  }

  static Tensor vec(std::initializer_list<S> v) { return from_vector(std::vector<S>(v)); }

  static Tensor matrix(std::initializer_list<std::initializer_list<S>> rows) {
    std::size_t r = rows.size();
    std::size_t c = rows.begin()->size();
    Tensor t(Shape{r, c});
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      for (S v : row) t.data_[i++] = v;
    }
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }

  // 2-d accessor (row-major).
  S& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const S& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    // exponent-bits check; vectorizes where std::isfinite would branch
    if constexpr (sizeof(S) == 4) {
      std::uint32_t bad = 0;
      for (S v : data_) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bad |= static_cast<std::uint32_t>((bits & 0x7f800000u) == 0x7f800000u);
      }
      return bad == 0;
    } else {
      std::uint64_t bad = 0;
      for (S v : data_) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        bad |= static_cast<std::uint64_t>((bits & 0x7ff0000000000000ull) == 0x7ff0000000000000ull);
      }
      return bad == 0;
    }
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape_ = shape_;
    out.data_.resize(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = static_cast<T>(data_[i]);
    return out;
  }

 private:
  Shape shape_;
  std::vector<S> data_;

  template <typename T>
  friend class Tensor;
};

namespace detail {

// Raises NumericFault if the result of an operation is not finite.
template <typename S>
inline void guard_finite(const Tensor<S>& t, const char* op) {
  if (!t.all_finite()) throw NumericFault(std::string("non-finite value produced by '") + op + "'");
}

// C[m x n] += or = A[m x k] * B[k x n].
template <typename S>
inline void gemm_nn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, S(0));
  for (std::size_t i = 0; i < m; ++i) {
    const S* arow = a + i * k;
    S* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      S av = arow[p];
      const S* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] += or = A[m x k] * B^T, with B stored [n x k]. This is the layout
// used by linear layers (x * W^T). B is transposed into a scratch buffer so
// the multiply runs with the stream-friendly nn kernel.
template <typename S>
inline void gemm_nt(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  thread_local std::vector<S> scratch;
  if (scratch.size() < k * n) scratch.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) scratch[p * n + j] = b[j * k + p];
  gemm_nn(a, scratch.data(), c, m, k, n, accumulate);
}

// C[m x n] += or = A^T * B, with A stored [k x m], B stored [k x n].
template <typename S>
inline void gemm_tn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, S(0));
  for (std::size_t p = 0; p < k; ++p) {
    const S* arow = a + p * m;
    const S* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      S av = arow[i];
      S* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Shape rule for binary elementwise operations: equal shapes, or the smaller
// operand's shape must equal the trailing dimensions of the larger one.
template <typename S>
inline void check_broadcast(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  const Shape& big = a.rank() >= b.rank() ? a.shape() : b.shape();
  const Shape& small = a.rank() >= b.rank() ? b.shape() : a.shape();
  std::size_t off = big.size() - small.size();
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[i] != big[off + i])
      throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                           " are not broadcast-compatible");
  }
}

template <typename S, typename F>
inline Tensor<S> broadcast_zip(const Tensor<S>& a, const Tensor<S>& b, F f, const char* op) {
  check_broadcast(a, b, op);
  if (a.size() == b.size()) {  // the hot path: equal shapes
    Tensor<S> out(a.shape());
    const S* pa = a.data();
    const S* pb = b.data();
    S* po = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) po[i] = f(pa[i], pb[i]);
    guard_finite(out, op);
    return out;
  }
  const bool a_big = a.size() >= b.size();
  const Tensor<S>& big = a_big ? a : b;
  const Tensor<S>& small = a_big ? b : a;
  Tensor<S> out(big.shape());
  std::size_t ssz = small.size();
  const S* pb_ = big.data();
  const S* ps = small.data();
  S* po = out.data();
  for (std::size_t base = 0; base < big.size(); base += ssz)
    for (std::size_t k = 0; k < ssz; ++k) {
      std::size_t i = base + k;
      po[i] = a_big ? f(pb_[i], ps[k]) : f(ps[k], pb_[i]);
    }
  guard_finite(out, op);
  return out;
}

// Accumulates grad of shape `big` into a buffer of shape `small` by summing
// over the leading (broadcast) positions.
template <typename S>
inline void reduce_to_shape(const Tensor<S>& grad, Tensor<S>& acc) {
  std::size_t ssz = acc.size();
  const S* pg = grad.data();
  S* pa = acc.data();
  for (std::size_t base = 0; base < grad.size(); base += ssz)
    for (std::size_t k = 0; k < ssz; ++k) pa[k] += pg[base + k];
}

}  // namespace detail

// ---- pure (non-differentiable) tensor math -------------------------------
// The tape ops in ops.hpp are built on these kernels; they are also usable
// directly where gradients are not needed.

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  Tensor<S> out(Shape{a.dim(0), b.dim(1)});
  detail::gemm_nn(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1), false);
  detail::guard_finite(out, "matmul");
  return out;
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
  if (a.rank() != 2) throw DimensionError("transpose: rank-2 tensor required, got " + shape_str(a.shape()));
  Tensor<S> out(Shape{a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::broadcast_zip(a, b, [](S x, S y) { return x + y; }, "add");
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::broadcast_zip(a, b, [](S x, S y) { return x - y; }, "sub");
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::broadcast_zip(a, b, [](S x, S y) { return x * y; }, "mul");
}

template <typename S, typename F>
Tensor<S> map(const Tensor<S>& a, F f, const char* op) {
  Tensor<S> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  detail::guard_finite(out, op);
  return out;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  return map(a, [](S x) { return x > S(0) ? x : S(0); }, "relu");
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  return map(a, [](S x) { return S(1) / (S(1) + std::exp(-x)); }, "sigmoid");
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
  return map(a, [](S x) { return std::tanh(x); }, "tanh");
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  return map(a, [c](S x) { return x * c; }, "scale");
}

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S c) {
  return map(a, [c](S x) { return x + c; }, "add_scalar");
}

namespace detail {

template <typename S>
inline void check_axis(const Tensor<S>& a, std::size_t axis, const char* op) {
  if (axis >= a.rank())
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(a.shape()));
}

// Iterates a reduction over `axis`; f(out_index, value) is called for every
// element, where out_index is the flat index in the reduced tensor.
template <typename S, typename F>
inline Shape reduced_shape(const Tensor<S>& a, std::size_t axis, F&& consume) {
  Shape out_shape;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (i != axis) out_shape.push_back(a.dim(i));
  if (out_shape.empty()) out_shape.push_back(1);

  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
  std::size_t n_axis = a.dim(axis);
  std::size_t outer = a.size() / (inner * n_axis);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t k = 0; k < n_axis; ++k)
      for (std::size_t in = 0; in < inner; ++in) consume(o * inner + in, k, a[(o * n_axis + k) * inner + in]);
  return out_shape;
}

}  // namespace detail

template <typename S>
Tensor<S> sum(const Tensor<S>& a, std::size_t axis) {
  detail::check_axis(a, axis, "sum");
  Tensor<S> out;
  Shape os = detail::reduced_shape(a, axis, [](std::size_t, std::size_t, S) {});
  out = Tensor<S>(os);
  detail::reduced_shape(a, axis, [&](std::size_t oi, std::size_t, S v) { out[oi] += v; });
  detail::guard_finite(out, "sum");
  return out;
}

template <typename S>
Tensor<S> mean(const Tensor<S>& a, std::size_t axis) {
  detail::check_axis(a, axis, "mean");
  Tensor<S> out = sum(a, axis);
  S inv = S(1) / static_cast<S>(a.dim(axis));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  return out;
}

template <typename S>
Tensor<S> max(const Tensor<S>& a, std::size_t axis) {
  detail::check_axis(a, axis, "max");
  Tensor<S> out;
  Shape os = detail::reduced_shape(a, axis, [](std::size_t, std::size_t, S) {});
  out = Tensor<S>(os, std::numeric_limits<S>::lowest());
  detail::reduced_shape(a, axis, [&](std::size_t oi, std::size_t, S v) {
    if (v > out[oi]) out[oi] = v;
  });
  return out;
}

// Index of the maximum along `axis`; ties resolve to the LOWEST index so the
// result is identical across runs and platforms.
template <typename S>
Tensor<S> argmax(const Tensor<S>& a, std::size_t axis) {
  detail::check_axis(a, axis, "argmax");
  Shape os = detail::reduced_shape(a, axis, [](std::size_t, std::size_t, S) {});
  Tensor<S> best(os, std::numeric_limits<S>::lowest());
  Tensor<S> idx(os, S(0));
  detail::reduced_shape(a, axis, [&](std::size_t oi, std::size_t k, S v) {
    if (v > best[oi]) {
      best[oi] = v;
      idx[oi] = static_cast<S>(k);
    }
  });
  return idx;
}

// argmax over the first n_valid entries of a row; ties to lowest index.
template <typename S>
std::size_t argmax_prefix(const S* row, std::size_t n_valid) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n_valid; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

template <typename S>
S sum_all(const Tensor<S>& a) {
  S acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  return acc;
}

template <typename S>
S mean_all(const Tensor<S>& a) {
  return sum_all(a) / static_cast<S>(a.size());
}

template <typename S>
double l2_norm(const Tensor<S>& a) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(a[i]);
  return std::sqrt(acc);
}

}  // namespace lan
