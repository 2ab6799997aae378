#include "ntm/tape.hpp"

#include "ntm/error.hpp"

namespace ntm::ad {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("value() of an unbound Var");
  return tape_->value(id_);
}

const Tensor& Var::grad() const {
  if (!tape_) throw ContractError("grad() of an unbound Var");
  return tape_->grad(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_leaf = true;
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.is_leaf = true;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> operands, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(operands.begin(), operands.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> operands, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : operands) {
    if (v.tape_ != this) throw ContractError("operand recorded on a different tape");
    needs = needs || nodes_[v.id_].requires_grad;
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(std::size_t id) { return grad_buffer(id); }

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::zero_grad() {
  for (Node& n : nodes_)
    if (n.has_grad) n.grad.fill(0.0);
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("loss recorded on a different tape");
  if (value(loss.id_).size() != 1)
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(value(loss.id_).shape()));
  for (Node& n : nodes_)
    if (!n.is_leaf && n.has_grad) n.grad.fill(0.0);
  if (!nodes_[loss.id_].requires_grad) return;

  grad_buffer(loss.id_)[0] += 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, i);
  }
}

}  // namespace ntm::ad
