#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "lan/errors.hpp"
#include "lan/tensor.hpp"

namespace lan {

template <typename S>
class Tape;

// Handle to a value recorded on a tape.
template <typename S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, std::uint32_t node) : tape_(tape), node_(node) {}

  const Tensor<S>& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape<S>* tape() const { return tape_; }
  std::uint32_t node() const { return node_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<S>* tape_ = nullptr;
  std::uint32_t node_ = 0;
};

// Gradients keyed by leaf id, in leaf registration order. Leaves that do not
// influence the loss get explicit zero tensors.
template <typename S>
struct Gradients {
  std::vector<std::pair<std::uint64_t, Tensor<S>>> items;

  Tensor<S>* find(std::uint64_t id) {
    for (auto& [k, g] : items)
      if (k == id) return &g;
    return nullptr;
  }
  const Tensor<S>* find(std::uint64_t id) const {
    return const_cast<Gradients*>(this)->find(id);
  }
};

// Ordered record of differentiable operations. Nodes may only be added while
// a recording Scope is open; backward() walks the record once in reverse.
template <typename S>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  // RAII recording scope. Ops called while no scope is open throw.
  class Scope {
   public:
    explicit Scope(Tape& tape) : tape_(tape) {
      if (tape_.recording_) throw ContractError("tape recording scope already open");
      tape_.recording_ = true;
    }
    ~Scope() { tape_.recording_ = false; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape& tape_;
  };

  bool recording() const { return recording_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Registers a trainable leaf. Its gradient is reported by backward().
  Var<S> leaf(const Tensor<S>& value, std::uint64_t leaf_id) {
    Var<S> v = emit(value, {}, nullptr, "leaf");
    nodes_[v.node()].leaf_id = leaf_id;
    nodes_[v.node()].is_leaf = true;
    leaves_.emplace_back(leaf_id, v.node());
    return v;
  }

  // Records a value that gradients do not flow into.
  Var<S> constant(Tensor<S> value) { return emit(std::move(value), {}, nullptr, "constant"); }

  Var<S> emit(Tensor<S> value, std::vector<std::uint32_t> parents, BackwardFn back, const char* op) {
    if (!recording_) throw ContractError(std::string("tape op '") + op + "' outside a recording scope");
    nodes_.push_back(NodeRec{std::move(value), std::move(parents), std::move(back), op, 0, false});
    return Var<S>(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  const Tensor<S>& value_of(std::uint32_t node) const { return nodes_[node].value; }

  // Gradient buffer of a node, zero-initialized on first touch.
  Tensor<S>& grad_buf(std::uint32_t node) {
    if (grads_[node].size() == 0) grads_[node] = Tensor<S>::zeros(nodes_[node].value.shape());
    return grads_[node];
  }
  bool grad_touched(std::uint32_t node) const { return grads_[node].size() != 0; }

  // Reverse pass from a scalar loss. Every node is visited at most once;
  // exact accumulation into every registered leaf.
  Gradients<S> backward(Var<S> loss) {
    if (loss.tape() != this) throw ContractError("backward: loss var belongs to a different tape");
    if (loss.value().size() != 1) throw ContractError("backward: loss must be a scalar tensor");
    grads_.assign(nodes_.size(), Tensor<S>());
    grad_buf(loss.node())[0] = S(1);
    for (std::uint32_t i = loss.node() + 1; i-- > 0;) {
      NodeRec& n = nodes_[i];
      if (!grad_touched(i)) continue;
      if (!grads_[i].all_finite())
        throw NumericFault(std::string("non-finite gradient at op '") + n.op + "'");
      if (n.back) n.back(*this, i);
    }
    Gradients<S> out;
    out.items.reserve(leaves_.size());
    for (auto& [id, node] : leaves_) {
      if (grad_touched(node))
        out.items.emplace_back(id, grads_[node]);
      else
        out.items.emplace_back(id, Tensor<S>::zeros(nodes_[node].value.shape()));
    }
    grads_.clear();
    return out;
  }

  // Drops all nodes (keeps allocated capacity for reuse).
  void reset() {
    nodes_.clear();
    leaves_.clear();
    grads_.clear();
  }

 private:
  struct NodeRec {
    Tensor<S> value;
    std::vector<std::uint32_t> parents;
    BackwardFn back;
    const char* op;
    std::uint64_t leaf_id;
    bool is_leaf;
  };

  friend class Var<S>;

  std::vector<NodeRec> nodes_;
  std::vector<Tensor<S>> grads_;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> leaves_;
  bool recording_ = false;

 public:
  const std::vector<std::uint32_t>& parents_of(std::uint32_t node) const { return nodes_[node].parents; }
};

template <typename S>
const Tensor<S>& Var<S>::value() const {
  return tape_->value_of(node_);
}

}  // namespace lan
