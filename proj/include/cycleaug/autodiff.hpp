// Copyright 2026 The cycleaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cycleaug/tensor.hpp"

namespace cycleaug {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
};

/// Gradients keyed by the parameter tensor they belong to.
template <typename T>
class Gradients {
 public:
  void accumulate(const Tensor<T>* param, const Tensor<T>& g) {
    auto [it, inserted] = grads_.try_emplace(param, g);
    if (!inserted) it->second += g;
  }

  void ensure(const Tensor<T>* param) {
    grads_.try_emplace(param, Tensor<T>::zeros(param->shape()));
  }

  bool contains(const Tensor<T>& param) const { return grads_.count(&param) != 0; }

  /// Gradient for `param`; zeros when the parameter never reached the loss.
  Tensor<T> of(const Tensor<T>& param) const {
    auto it = grads_.find(&param);
    if (it == grads_.end()) return Tensor<T>::zeros(param.shape());
    return it->second;
  }

  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<const Tensor<T>*, Tensor<T>> grads_;
};

/// Linear record of an expression graph for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and the reverse sweep visits each node once. Parameter
/// leaves reference the caller's tensor instead of copying it; the caller must
/// keep those tensors alive and unmodified until backward() returns.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    std::string_view op;
    std::vector<std::size_t> inputs;
    Tensor<T> value;
    const Tensor<T>* parameter = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> v) {
    Node node;
    node.op = "constant";
    node.value = std::move(v);
    return push(std::move(node));
  }

  /// Leaf bound to a parameter. A frozen parameter acts as a constant.
  Var<T> parameter(const Tensor<T>& p, bool trainable = true) {
    Node node;
    node.op = "parameter";
    node.parameter = &p;
    node.requires_grad = trainable;
    if (trainable) trainable_.push_back(&p);
    return push(std::move(node));
  }

  /// Appends an op node. `backward` reads grad(self) and calls accumulate()
  /// for its inputs; it is dropped when no input needs a gradient.
  Var<T> record(std::string_view op, std::vector<std::size_t> inputs, Tensor<T> value,
                BackwardFn backward) {
    if (check_finite_ && !value.all_finite()) {
      throw NumericError("non-finite value produced by op '" + std::string(op) + "'");
    }
    Node node;
    node.op = op;
    node.value = std::move(value);
    for (std::size_t in : inputs) node.requires_grad = node.requires_grad || nodes_.at(in).requires_grad;
    node.inputs = std::move(inputs);
    if (node.requires_grad) node.backward = std::move(backward);
    return push(std::move(node));
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.parameter ? *n.parameter : n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  const Tensor<T>& grad(std::size_t id) const { return grads_.at(id); }

  /// Accumulator for the gradient of `id`, zero-initialized on first use.
  Tensor<T>& grad_slot(std::size_t id) {
    Tensor<T>& g = grads_.at(id);
    if (g.empty()) g = Tensor<T>::zeros(value(id).shape());
    return g;
  }

  void accumulate(std::size_t id, const Tensor<T>& g) {
    if (!requires_grad(id)) return;
    Tensor<T>& slot = grads_.at(id);
    if (slot.empty()) {
      slot = g;
    } else {
      slot += g;
    }
  }

  /// Reverse sweep from a scalar node. Every trainable parameter bound on
  /// this tape gets an entry, zero when it has no path to the seed.
  Gradients<T> backward(Var<T> seed) {
    if (seed.tape != this) throw std::invalid_argument("backward: seed belongs to another tape");
    if (value(seed.id).numel() != 1) {
      throw ShapeError("backward: seed must be scalar, got shape " + shape_str(value(seed.id).shape()));
    }
    grads_.assign(nodes_.size(), Tensor<T>{});
    Gradients<T> out;
    if (nodes_[seed.id].requires_grad) {
      grads_[seed.id] = Tensor<T>::ones(value(seed.id).shape());
      for (std::size_t i = seed.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.requires_grad || grads_[i].empty()) continue;
        ++visited_;
        if (node.parameter) {
          out.accumulate(node.parameter, grads_[i]);
        } else if (node.backward) {
          node.backward(*this, i);
        }
        if (i != seed.id) grads_[i] = Tensor<T>{};
      }
    }
    for (const Tensor<T>* p : trainable_) out.ensure(p);
    return out;
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t nodes_visited() const { return visited_; }

  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  Var<T> push(Node node) {
    nodes_.push_back(std::move(node));
    return Var<T>{this, nodes_.size() - 1};
  }

  std::deque<Node> nodes_;  // stable references while the tape grows
  std::vector<Tensor<T>> grads_;
  std::vector<const Tensor<T>*> trainable_;
  std::size_t visited_ = 0;
  bool check_finite_ = true;
};

}  // namespace cycleaug
