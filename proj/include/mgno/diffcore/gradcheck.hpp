/// @file gradcheck.hpp
/// @brief Central-difference verification of tape gradients.

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mgno/diffcore/tensor.hpp"

namespace mgno::diff {

struct GradcheckEntry {
  std::string name;
  /// max_i |analytic_i - numeric_i| / max(|analytic|_inf, |numeric|_inf) over the tensor.
  double discrepancy = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool pass() const;
  double worst() const;
  /// Names of failing tensors, comma separated.
  std::string failures() const;
};

using NamedTensor = std::pair<std::string, Tensor>;

/// Compare tape gradients of a scalar function against central differences.
/// `f` must read the given tensors (it is evaluated once on a tape and 2N
/// times without one, after in-place perturbation of each element).
GradcheckReport gradcheck(const std::function<Tensor()>& f, const std::vector<NamedTensor>& inputs,
                          double eps = 1e-5, double tol = 1e-6);

}  // namespace mgno::diff
