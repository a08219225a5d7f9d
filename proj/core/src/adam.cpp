#include "mv3d/adam.hpp"

#include <cmath>

#include "mv3d/errors.hpp"

namespace mv3d {

AdamState::AdamState(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0)) throw std::invalid_argument("adam: learning rate must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape);
    v_.emplace_back(p->value.shape);
  }
}

void AdamState::step() {
  for (const Parameter* p : params_) {
    for (float g : p->grad.data) {
      if (!std::isfinite(g)) {
        throw NumericalError("adam: non-finite gradient in parameter '" + p->name + "'");
      }
    }
  }
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    float* m = m_[i].data.data();
    float* v = v_[i].data.data();
    const float* g = p.grad.data.data();
    float* val = p.value.data.data();
    const std::int64_t n = p.value.numel();
    for (std::int64_t j = 0; j < n; ++j) {
      m[j] = static_cast<float>(b1 * m[j] + (1.0 - b1) * g[j]);
      v[j] = static_cast<float>(b2 * v[j] + (1.0 - b2) * g[j] * g[j]);
      const double mhat = m[j] / corr1;
      const double vhat = v[j] / corr2;
      val[j] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

}  // namespace mv3d
