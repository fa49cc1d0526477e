#include "mgno/training/adam.hpp"

#include <cmath>

namespace mgno::train {

void adam_step(ops::ParameterStore& params, AdamState& state, const AdamConfig& cfg) {
  for (const auto& [name, t] : params.items()) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NonFiniteGradient(name);
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (const auto& [name, t] : params.items()) {
    if (!t.has_grad()) continue;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(t.numel(), 0.0);
      v.assign(t.numel(), 0.0);
    }
    const auto g = t.grad();
    auto p = diff::Tensor(t).mutable_data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace mgno::train
