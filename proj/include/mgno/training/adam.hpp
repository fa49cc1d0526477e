/// @file adam.hpp
/// @brief Bias-corrected Adam over a ParameterStore.

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgno/operators/params.hpp"

namespace mgno::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, std::vector<double>> m, v;
  std::size_t step = 0;
};

/// A gradient contained NaN or infinity; what() names the parameter.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter '" + param + "'"), param_(param) {}
  const std::string& parameter() const { return param_; }

 private:
  std::string param_;
};

/// One update using the gradients currently held by the parameters (missing grads count
/// as zero). All gradients are checked before any parameter changes.
void adam_step(ops::ParameterStore& params, AdamState& state, const AdamConfig& cfg);

}  // namespace mgno::train
