/// @file loss.hpp
/// @brief Relative L2 error, plain and differentiable.

#pragma once

#include <span>

#include "mgno/diffcore/tensor.hpp"

namespace mgno::train {

/// ||pred - truth||_2 / ||truth||_2. Throws std::invalid_argument for a zero-norm truth
/// or mismatched lengths.
double relative_l2(std::span<const double> pred, std::span<const double> truth);

/// Differentiable form in normalized units: the model predicts (u - mu) / sigma, so
/// ||u_pred - u||_2 = sigma ||pred - target||_2 and the loss is that over ||u||_2.
diff::Tensor relative_l2_loss(const diff::Tensor& pred, const diff::Tensor& target, double sigma,
                              double truth_norm);

}  // namespace mgno::train
