/* Copyright 2026 The SSSM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef SSSM_AUTODIFF_H_
#define SSSM_AUTODIFF_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sssm/tensor.h"

namespace sssm {

// A named learnable leaf tensor and its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

// Insertion-ordered parameter registry. Names are unique.
template <typename T>
class ParameterSet {
 public:
  Parameter<T>& add(const std::string& name, Tensor<T> value);

  Parameter<T>& get(const std::string& name);
  const Parameter<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }

  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Resets every gradient to zeros of the parameter's shape.
  void zero_grad();

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<U>());
    return out;
  }

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
class Tape;

// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  std::size_t size() const { return value().size(); }
};

// Records operations in execution order and replays their adjoints in
// reverse. Every recorded forward value is checked for NaN/Inf.
//
// A tape is single-use: record a forward pass, call backward() once, drop it.
template <typename T>
class Tape {
 public:
  // Receives the node's forward value and output gradient, and adds the
  // input gradients through accumulator().
  using BackwardFn = std::function<void(const Tensor<T>& out_value,
                                        const Tensor<T>& out_grad, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> leaf(Tensor<T> value);

  // Binds a parameter as a differentiable leaf. Binding the same parameter
  // twice returns the same Var, so shared weights accumulate one gradient.
  Var<T> parameter(Parameter<T>& param);

  Var<T> record(std::string_view op, Tensor<T> value,
                std::initializer_list<Var<T>> inputs, BackwardFn backward);

  const Tensor<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient buffer of node `id`, zero-initialized on first access, or
  // nullptr when the node does not require a gradient.
  Tensor<T>* accumulator(std::size_t id);

  // Gradient of v after backward(); nullptr if v was unreachable.
  const Tensor<T>* grad(Var<T> v) const;

  // Reverse sweep from a scalar loss. Adds the resulting gradients into the
  // grad field of every bound parameter; bound but unreachable parameters
  // end with (at least) a zero gradient of the right shape.
  void backward(Var<T> loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  // A deque keeps references to recorded values valid while recording.
  std::deque<Node> nodes_;
  std::map<const Parameter<T>*, std::size_t> bound_;
  std::vector<std::pair<std::size_t, Parameter<T>*>> bindings_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape->value(*this);
}

}  // namespace sssm

#endif  // SSSM_AUTODIFF_H_
