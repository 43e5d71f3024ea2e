#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tegcn/tensor.hpp"

namespace tegcn {

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string id, Tensor v) : name(std::move(id)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }

  std::string name;
  Tensor value;
  Tensor grad;
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the Tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of one forward pass. Backward replays it in reverse and
// writes each parameter's gradient into Parameter::grad exactly once.
// Confined to a single thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(Parameter& p);
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  // Seeds d(root)/d(root) = 1; root must hold a single value.
  void backward(const Var& root);
  void backward(const Var& root, const Tensor& seed);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  // Gradient of a node after backward; zeros if nothing flowed into it.
  Tensor grad(std::size_t id) const;
  // Mutable gradient accumulator, allocated as zeros on first access.
  Tensor& grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& visit_log() const { return visit_log_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  std::vector<std::size_t> visit_log_;
  bool done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace tegcn
