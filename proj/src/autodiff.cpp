#include "tegcn/autodiff.hpp"

#include <cassert>

namespace tegcn {

Var Tape::constant(Tensor value) {
  value.round_in_place();
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  value.round_in_place();
#ifndef NDEBUG
  if (!value.all_finite()) throw NumericError("non-finite value produced by a recorded op");
#endif
  Node n;
  n.value = std::move(value);
  for (auto id : inputs) {
    assert(id < nodes_.size());
    n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  }
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& root) {
  if (root.value().size() != 1) {
    throw DimensionError("backward() without a seed needs a scalar root, got " + shape_str(root.shape()));
  }
  backward(root, Tensor(root.shape(), 1.0));
}

void Tape::backward(const Var& root, const Tensor& seed) {
  if (done_) throw ConfigError("backward() called twice on the same tape");
  done_ = true;
  require_same_shape(root.value(), seed, "backward seed");
  Tensor& g = grad_buffer(root.id());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];

  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    visit_log_.push_back(i);
    if (n.backward) n.backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    Tensor& pg = n.param->grad;
    if (pg.shape() != n.grad.shape()) pg = Tensor(n.grad.shape());
    for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace tegcn
