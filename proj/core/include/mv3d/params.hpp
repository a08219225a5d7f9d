#pragma once

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "mv3d/tensor.hpp"

namespace mv3d {

// A named trainable tensor plus its accumulated gradient (always same shape).
template <typename T>
struct ParameterT {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;

  ParameterT(std::string n, TensorT<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape) {}
};

using Parameter = ParameterT<float>;

// Ordered, uniquely named parameter collection. Order is insertion order and
// fixed for the life of the set; optimizers and the weights file rely on it.
template <typename T>
class ParamSetT {
 public:
  ParameterT<T>& add(const std::string& name, TensorT<T> value) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    index_[name] = params_.size();
    params_.emplace_back(name, std::move(value));
    return params_.back();
  }

  ParameterT<T>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  std::size_t size() const { return params_.size(); }
  ParameterT<T>& operator[](std::size_t i) { return params_[i]; }
  const ParameterT<T>& operator[](std::size_t i) const { return params_[i]; }

  std::vector<ParameterT<T>*> pointers() {
    std::vector<ParameterT<T>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  void zero_grads() {
    for (auto& p : params_) {
      for (auto& g : p.grad.data) g = T(0);
    }
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<ParameterT<T>> params_;  // deque: stable addresses for bound graph leaves
  std::unordered_map<std::string, std::size_t> index_;
};

using ParamSet = ParamSetT<float>;

}  // namespace mv3d
