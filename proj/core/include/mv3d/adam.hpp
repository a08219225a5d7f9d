#pragma once

#include <cstdint>
#include <vector>

#include "mv3d/params.hpp"

namespace mv3d {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adam with bias correction. Moments are stored per parameter in registration
// order; t increments by exactly 1 per step.
class AdamState {
 public:
  AdamState(std::vector<Parameter*> params, AdamConfig cfg);

  // One update from the parameters' current grads. Throws NumericalError
  // naming the parameter if a gradient is not finite.
  void step();

  std::int64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::size_t size() const { return params_.size(); }
  Tensor& moment1(std::size_t i) { return m_[i]; }
  Tensor& moment2(std::size_t i) { return v_[i]; }
  const Tensor& moment1(std::size_t i) const { return m_[i]; }
  const Tensor& moment2(std::size_t i) const { return v_[i]; }
  const Parameter& param(std::size_t i) const { return *params_[i]; }
  void set_t(std::int64_t t) { t_ = t; }  // checkpoint restore

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
  AdamConfig cfg_;
};

inline void adam_step(AdamState& state) { state.step(); }

}  // namespace mv3d
