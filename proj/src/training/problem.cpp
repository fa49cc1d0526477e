#include "mgno/training/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgno::train {

namespace {

constexpr std::size_t kMaxScales = 4;
constexpr std::size_t kNodes[kMaxScales] = {256, 64, 16, 4};
constexpr double kRadiusFraction[kMaxScales] = {0.05, 0.10, 0.20, 0.40};
constexpr double kDarcyRadius[kMaxScales] = {0.10, 0.20, 0.40, 0.80};

std::size_t grid_size(const pde::Dataset& data) { return data.meta.grid; }

std::size_t n_samples(const pde::Dataset& data) { return data.meta.n_train + data.meta.n_test; }

}  // namespace

graph::Domain default_domain(pde::PdeKind pde) {
  graph::Domain d;
  if (pde == pde::PdeKind::darcy) {
    d.dim = 2;
    d.metric = graph::Metric::euclidean;
    d.lower = 0.0;
    d.upper = 1.0;
  } else {
    d.dim = 1;
    d.metric = graph::Metric::periodic;
    d.lower = 0.0;
    d.upper = 2.0 * std::numbers::pi;
  }
  return d;
}

std::vector<graph::ScaleSpec> default_scale_specs(pde::PdeKind pde, std::size_t scales) {
  if (scales < 1 || scales > kMaxScales) {
    throw std::invalid_argument("scales must be in [1, " + std::to_string(kMaxScales) + "], got " +
                                std::to_string(scales));
  }
  std::vector<graph::ScaleSpec> specs(scales);
  auto radius = [&](std::size_t l) {
    return pde == pde::PdeKind::darcy ? kDarcyRadius[l]
                                      : 2.0 * std::numbers::pi * kRadiusFraction[l];
  };
  for (std::size_t l = 0; l < scales; ++l) {
    specs[l].n_nodes = kNodes[l];
    specs[l].radius_intra = radius(l);
    specs[l].radius_cross = l + 1 < kMaxScales ? radius(l + 1) : radius(l);
  }
  return specs;
}

graph::GridData sample_grid(const pde::Dataset& data, std::size_t index) {
  if (index >= n_samples(data)) throw std::out_of_range("sample index out of range");
  const std::size_t s = grid_size(data);
  graph::GridData g;
  if (data.meta.pde == pde::PdeKind::darcy) {
    const double h = 1.0 / double(s - 1);
    g.dim = 2;
    g.f_raw = 3;
    g.coords.resize(s * s * 2);
    g.values.resize(s * s * 3);
    const double* a = data.field("a").sample(index);
    const double* grad = data.field("grad_a").sample(index);
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = 0; j < s; ++j) {
        const std::size_t p = i * s + j;
        g.coords[2 * p] = double(i) * h;
        g.coords[2 * p + 1] = double(j) * h;
        g.values[3 * p] = a[p];
        g.values[3 * p + 1] = grad[p];
        g.values[3 * p + 2] = grad[s * s + p];
      }
    }
  } else {
    const double dx = 2.0 * std::numbers::pi / double(s);
    g.dim = 1;
    g.f_raw = 1;
    g.coords.resize(s);
    const double* u0 = data.field("u0").sample(index);
    g.values.assign(u0, u0 + s);
    for (std::size_t j = 0; j < s; ++j) g.coords[j] = double(j) * dx;
  }
  return g;
}

std::vector<double> sample_solution(const pde::Dataset& data, std::size_t index) {
  if (index >= n_samples(data)) throw std::out_of_range("sample index out of range");
  const auto& f = data.field(data.meta.pde == pde::PdeKind::darcy ? "u" : "u1");
  const double* u = f.sample(index);
  return std::vector<double>(u, u + f.sample_size());
}

Problem prepare_problem(const pde::Dataset& data, std::size_t scales, std::uint64_t seed) {
  Problem pb;
  pb.pde = data.meta.pde;
  pb.scales = scales;
  pb.seed = seed;
  const auto domain = default_domain(pb.pde);
  const auto specs = default_scale_specs(pb.pde, scales);
  pb.dim = domain.dim;
  const std::size_t n_train = data.meta.n_train;
  if (n_train == 0) throw std::invalid_argument("prepare_problem: empty train split");

  std::vector<graph::GridData> grids(n_samples(data));
  std::vector<std::vector<double>> solutions(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    grids[i] = sample_grid(data, i);
    solutions[i] = sample_solution(data, i);
  }
  pb.f_raw = grids[0].f_raw;

  // Train-split statistics.
  pb.feature_mean.assign(pb.f_raw, 0.0);
  pb.feature_std.assign(pb.f_raw, 0.0);
  double count = 0.0, t_sum = 0.0, t_sq = 0.0;
  for (std::size_t i = 0; i < n_train; ++i) {
    const auto& v = grids[i].values;
    for (std::size_t p = 0; p < grids[i].n_points(); ++p) {
      for (std::size_t c = 0; c < pb.f_raw; ++c) pb.feature_mean[c] += v[p * pb.f_raw + c];
    }
    count += double(grids[i].n_points());
    for (double u : solutions[i]) {
      t_sum += u;
      t_sq += u * u;
    }
  }
  for (auto& m : pb.feature_mean) m /= count;
  for (std::size_t i = 0; i < n_train; ++i) {
    const auto& v = grids[i].values;
    for (std::size_t p = 0; p < grids[i].n_points(); ++p) {
      for (std::size_t c = 0; c < pb.f_raw; ++c) {
        const double d = v[p * pb.f_raw + c] - pb.feature_mean[c];
        pb.feature_std[c] += d * d;
      }
    }
  }
  for (auto& s : pb.feature_std) {
    s = std::sqrt(s / count);
    if (!(s > 0.0)) s = 1.0;
  }
  pb.target_mean = t_sum / count;
  pb.target_std = std::sqrt(std::max(0.0, t_sq / count - pb.target_mean * pb.target_mean));
  if (!(pb.target_std > 0.0)) pb.target_std = 1.0;

  for (std::size_t i = 0; i < grids.size(); ++i) {
    auto& g = grids[i];
    for (std::size_t p = 0; p < g.n_points(); ++p) {
      for (std::size_t c = 0; c < pb.f_raw; ++c) {
        double& v = g.values[p * pb.f_raw + c];
        v = (v - pb.feature_mean[c]) / pb.feature_std[c];
      }
    }
    const bool test = i >= n_train;
    diff::SeededRng rng(seed, pde::sample_stream(test, test ? i - n_train : i));
    PreparedSample ps;
    ps.graph = graph::build_graph(domain, specs, g, rng);
    const auto& nodes = ps.graph.levels[0].grid_index;
    ps.truth.resize(nodes.size());
    std::vector<double> target(nodes.size());
    double norm = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      ps.truth[k] = solutions[i][nodes[k]];
      target[k] = (ps.truth[k] - pb.target_mean) / pb.target_std;
      norm += ps.truth[k] * ps.truth[k];
    }
    ps.truth_norm = std::sqrt(norm);
    if (!(ps.truth_norm > 0.0)) {
      throw std::invalid_argument("prepare_problem: sample " + std::to_string(i) +
                                  " has a zero solution at the sampled nodes");
    }
    ps.target = diff::Tensor({nodes.size(), 1}, std::move(target));
    (test ? pb.test : pb.train).push_back(std::move(ps));
  }
  return pb;
}

}  // namespace mgno::train
