#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>

#include "ntm/tensor.hpp"

namespace ntm::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Accumulated gradient; zeros if backward never reached this node.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run gradient tape. Nodes are appended in evaluation order, so
/// the recording order is already a topological order of the graph.
///
/// A tape is confined to a single thread.
class Tape {
 public:
  /// Propagates the gradient of node `self` into its operands.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input; gradients accumulate into it.
  Var leaf(Tensor value);
  /// Input excluded from differentiation.
  Var constant(Tensor value);

  /// Appends an operation result. `backward` is dropped when none of the
  /// operands requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> operands, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> operands, BackwardFn backward);

  /// Reverse pass from a single-element node. Intermediate gradients are
  /// recomputed from scratch; leaf gradients accumulate until zero_grad().
  void backward(Var loss);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id);
  /// Gradient buffer of `id`, zero-allocated on first use. Used by BackwardFns.
  Tensor& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  // deque keeps references to existing nodes stable while recording.
  std::deque<Node> nodes_;
};

}  // namespace ntm::ad
