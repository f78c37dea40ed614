#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "balancereg/diffcore.hpp"

namespace balancereg {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Bias-corrected Adam over a fixed list of parameters. Moment buffers are
// bound by position to the parameter list given at construction.
class AdamState {
 public:
  AdamState(const AdamConfig& config, std::span<ad::Parameter* const> params);

  // theta -= lr * mhat / (sqrt(vhat) + eps), reading each parameter's grad.
  void step(std::span<ad::Parameter* const> params);

  std::uint64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace balancereg
