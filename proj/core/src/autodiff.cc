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
#include "sssm/autodiff.h"

#include <string>

namespace sssm {

template <typename T>
Parameter<T>& ParameterSet<T>::add(const std::string& name, Tensor<T> value) {
  if (index_.count(name)) {
    throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
  index_[name] = params_.size();
  Tensor<T> grad(value.shape());
  params_.push_back({name, std::move(value), std::move(grad)});
  return params_.back();
}

template <typename T>
Parameter<T>& ParameterSet<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw InvalidArgument("unknown parameter '" + name + "'");
  }
  return params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterSet<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw InvalidArgument("unknown parameter '" + name + "'");
  }
  return params_[it->second];
}

template <typename T>
std::size_t ParameterSet<T>::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p.grad = Tensor<T>(p.value.shape());
}

template <typename T>
bool ParameterSet<T>::operator==(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name ||
        params_[i].value != other.params_[i].value) {
      return false;
    }
  }
  return true;
}

template <typename T>
Var<T> Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  if (!value.all_finite()) throw NonFiniteError("constant contains NaN/Inf");
  return push(Node{std::move(value), {}, false, nullptr});
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  if (!value.all_finite()) throw NonFiniteError("leaf contains NaN/Inf");
  return push(Node{std::move(value), {}, true, nullptr});
}

template <typename T>
Var<T> Tape<T>::parameter(Parameter<T>& param) {
  auto it = bound_.find(&param);
  if (it != bound_.end()) return Var<T>{this, it->second};
  if (!param.value.all_finite()) {
    throw NonFiniteError("parameter '" + param.name + "' contains NaN/Inf");
  }
  Var<T> v = push(Node{param.value, {}, true, nullptr});
  bound_[&param] = v.id;
  bindings_.emplace_back(v.id, &param);
  return v;
}

template <typename T>
Var<T> Tape<T>::record(std::string_view op, Tensor<T> value,
                       std::initializer_list<Var<T>> inputs,
                       BackwardFn backward) {
  bool needs_grad = false;
  for (const Var<T>& in : inputs) {
    if (in.tape != this) {
      throw InvalidArgument(std::string(op) + ": input from another tape");
    }
    needs_grad = needs_grad || nodes_[in.id].requires_grad;
  }
  if (!value.all_finite()) {
    throw NonFiniteError(std::string(op) + " produced NaN/Inf");
  }
  return push(Node{std::move(value), {}, needs_grad,
                   needs_grad ? std::move(backward) : BackwardFn{}});
}

template <typename T>
Tensor<T>* Tape<T>::accumulator(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor<T>(n.value.shape());
  return &n.grad;
}

template <typename T>
const Tensor<T>* Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad.empty() ? nullptr : &n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw InvalidArgument("backward: loss from another tape");
  Node& root = nodes_.at(loss.id);
  if (root.value.size() != 1) {
    throw InvalidArgument("backward: loss must be scalar, got shape " +
                          to_string(root.value.shape()));
  }
  if (root.requires_grad) {
    root.grad = Tensor<T>(root.value.shape(), T{1});
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      // The callback may grow other nodes' grads but never reallocates
      // nodes_, so the reference stays valid.
      n.backward(n.value, n.grad, *this);
    }
  }
  for (auto& [id, param] : bindings_) {
    if (param->grad.shape() != param->value.shape()) {
      param->grad = Tensor<T>(param->value.shape());
    }
    const Tensor<T>& g = nodes_[id].grad;
    if (g.empty()) continue;
    for (std::size_t k = 0; k < g.size(); ++k) param->grad[k] += g[k];
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace sssm
