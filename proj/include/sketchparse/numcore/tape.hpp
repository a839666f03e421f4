#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>

#include "sketchparse/numcore/tensor.hpp"

namespace sketchparse::numcore {

/// A trainable tensor. `group` selects the learning-rate group in the optimizer.
template <typename T>
struct Parameter {
  std::string name;
  std::string group;
  Tensor<T> value;
  Tensor<T> grad;

  void zero_grad() { grad = Tensor<T>(value.shape()); }
};

template <typename T>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; only valid while the
/// owning tape is alive.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

/// Records primitive operations for reverse-mode differentiation. Backward
/// replays the recording in exact reverse order and may run only once.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  /// `training` switches dropout on; `grad_enabled=false` skips saving
  /// backward state entirely (inference).
  explicit Tape(bool training = false, std::uint64_t seed = 0, bool grad_enabled = true)
      : training_(training), grad_enabled_(grad_enabled), seed_(seed) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, nullptr, {}); }

  /// Differentiable leaf whose gradient can be read back with grad().
  Var<T> input(Tensor<T> value) { return push(std::move(value), grad_enabled_, nullptr, {}); }

  /// Leaf bound to a parameter. Repeated calls with the same parameter return
  /// the same node, so the parameter receives one accumulated gradient.
  Var<T> param(Parameter<T>& p) {
    if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
    Var<T> v = push(p.value, grad_enabled_, &p, {});
    param_ids_.emplace(&p, v.id);
    return v;
  }

  /// Records a derived value. `fn` is kept only when a parent needs gradients.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn fn) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id].requires_grad;
    }
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }

  const Tensor<T>& value(Var<T> v) const {
    check_owner(v);
    return nodes_[v.id].value;
  }

  bool requires_grad(Var<T> v) const {
    check_owner(v);
    return nodes_[v.id].requires_grad;
  }

  /// Gradient of the last backward() target w.r.t. `v`; zeros if unreached.
  Tensor<T> grad(Var<T> v) const {
    check_owner(v);
    const auto& n = nodes_[v.id];
    return n.grad.empty() && !n.value.empty() ? Tensor<T>(n.value.shape()) : n.grad;
  }

  /// Accumulation buffer for `v`'s gradient, allocated on first use.
  Tensor<T>& grad_buffer(Var<T> v) {
    auto& n = nodes_[v.id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  void backward(Var<T> loss) {
    check_owner(loss);
    if (backward_done_) throw ContractViolation("backward called twice on the same tape");
    if (nodes_[loss.id].value.size() != 1) {
      throw ContractViolation("backward target must be a scalar, got shape " +
                              shape_string(nodes_[loss.id].value.shape()));
    }
    backward_done_ = true;
    if (!nodes_[loss.id].requires_grad) return;
    grad_buffer(loss)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        n.backward(*this, n.grad);
      } else if (n.param != nullptr) {
        auto& pg = n.param->grad;
        if (pg.shape() != n.value.shape()) pg = Tensor<T>(n.value.shape());
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
      }
    }
  }

  bool training() const { return training_; }
  bool grad_enabled() const { return grad_enabled_; }
  std::uint64_t seed() const { return seed_; }
  /// Monotone counter handed to stochastic ops so each gets its own stream.
  std::uint64_t next_stream() { return stream_counter_++; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, Parameter<T>* param, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, param, std::move(fn)});
    return {this, nodes_.size() - 1};
  }

  void check_owner(Var<T> v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
      throw ContractViolation("variable does not belong to this tape");
    }
  }

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_ids_;
  bool training_;
  bool grad_enabled_;
  bool backward_done_ = false;
  std::uint64_t seed_;
  std::uint64_t stream_counter_ = 0;
};

}  // namespace sketchparse::numcore
