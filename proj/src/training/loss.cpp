#include "mgno/training/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mgno/diffcore/ops.hpp"

namespace mgno::train {

double relative_l2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("relative_l2: lengths differ (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(truth.size()) + ")");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative_l2: truth has zero norm");
  return std::sqrt(num) / std::sqrt(den);
}

diff::Tensor relative_l2_loss(const diff::Tensor& pred, const diff::Tensor& target, double sigma,
                              double truth_norm) {
  if (!(truth_norm > 0.0)) throw std::invalid_argument("relative_l2_loss: truth has zero norm");
  return diff::scale(diff::sqrt_scalar(diff::sum_squares(diff::sub(pred, target))),
                     sigma / truth_norm);
}

}  // namespace mgno::train
