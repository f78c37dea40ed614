#include "balancereg/optim.hpp"

#include <cmath>

#include "balancereg/errors.hpp"

namespace balancereg {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ContractError("Adam learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ContractError("Adam eps must be > 0");
}

AdamState::AdamState(const AdamConfig& config, std::span<ad::Parameter* const> params) : config_(config) {
  config_.validate();
  for (const ad::Parameter* p : params) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void AdamState::step(std::span<ad::Parameter* const> params) {
  if (params.size() != m_.size()) {
    throw ContractError("Adam state tracks " + std::to_string(m_.size()) + " parameters, step given " +
                        std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ad::Parameter& p = *params[k];
    if (!p.value.same_shape(m_[k]) || !p.grad.same_shape(m_[k])) {
      throw ContractError("Adam: parameter " + p.name + " " + p.value.shape_string() + " with gradient " +
                          p.grad.shape_string() + " does not match moment " + m_[k].shape_string());
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data[i];
      m.data[i] = config_.beta1 * m.data[i] + (1.0 - config_.beta1) * g;
      v.data[i] = config_.beta2 * v.data[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m.data[i] / c1;
      const double v_hat = v.data[i] / c2;
      p.value.data[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace balancereg
