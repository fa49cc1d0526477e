/// @file problem.hpp
/// @brief Learning problems: normalized inputs and per-sample graphs built from a dataset.
///
/// Input channels are standardized per channel and the target by one scalar,
/// both with statistics of the train split. Each sample gets its own graph,
/// drawn from the sample's seed stream so that the same (dataset, scales,
/// seed) always yields the same graphs.

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mgno/diffcore/tensor.hpp"
#include "mgno/meshgraph/graph.hpp"
#include "mgno/pdegen/dataset.hpp"

namespace mgno::train {

struct PreparedSample {
  graph::MultiScaleGraph graph;
  diff::Tensor target;         // (n_1 x 1), normalized
  std::vector<double> truth;   // raw solution at finest-scale nodes
  double truth_norm = 0.0;
};

struct Problem {
  pde::PdeKind pde = pde::PdeKind::darcy;
  std::size_t scales = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::size_t f_raw = 0;
  std::vector<double> feature_mean, feature_std;
  double target_mean = 0.0, target_std = 1.0;
  std::vector<PreparedSample> train, test;

  std::size_t input_features() const { return f_raw + dim; }
  std::size_t edge_features() const { return 2 * dim + 2 * f_raw; }
};

/// Default domain for a PDE: (0,1)² Euclidean for Darcy, (0,2π) periodic for Burgers.
graph::Domain default_domain(pde::PdeKind pde);

/// The first `scales` entries of the default per-scale node counts and radii;
/// each cross radius is the intra radius of the next coarser scale.
std::vector<graph::ScaleSpec> default_scale_specs(pde::PdeKind pde, std::size_t scales);

/// Grid coordinates and raw input channels of one sample.
graph::GridData sample_grid(const pde::Dataset& data, std::size_t index);

/// Raw solution values of one sample on the grid.
std::vector<double> sample_solution(const pde::Dataset& data, std::size_t index);

Problem prepare_problem(const pde::Dataset& data, std::size_t scales, std::uint64_t seed);

}  // namespace mgno::train
