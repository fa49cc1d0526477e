#include "mgno/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mgno::diff {

bool GradcheckReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.discrepancy);
  return w;
}

std::string GradcheckReport::failures() const {
  std::string out;
  for (const auto& e : entries) {
    if (e.pass) continue;
    if (!out.empty()) out += ", ";
    out += e.name;
  }
  return out;
}

GradcheckReport gradcheck(const std::function<Tensor()>& f, const std::vector<NamedTensor>& inputs,
                          double eps, double tol) {
  std::vector<bool> previous_flags;
  for (const auto& [name, t] : inputs) {
    previous_flags.push_back(t.requires_grad());
    Tensor h = t;
    h.set_requires_grad(true);
    h.zero_grad();
  }

  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f();
    tape.backward(loss);
  }

  GradcheckReport report;
  for (std::size_t idx = 0; idx < inputs.size(); ++idx) {
    Tensor t = inputs[idx].second;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    std::vector<double> numeric(t.numel());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double plus = f().item();
      data[i] = saved - eps;
      const double minus = f().item();
      data[i] = saved;
      numeric[i] = (plus - minus) / (2.0 * eps);
    }
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
      diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    }
    GradcheckEntry entry;
    entry.name = inputs[idx].first;
    entry.discrepancy = scale > 0.0 ? diff / scale : diff;
    entry.pass = std::isfinite(entry.discrepancy) && entry.discrepancy <= tol;
    report.entries.push_back(std::move(entry));
    t.zero_grad();
    t.set_requires_grad(previous_flags[idx]);
  }
  return report;
}

}  // namespace mgno::diff
