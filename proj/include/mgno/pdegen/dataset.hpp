/// @file dataset.hpp
/// @brief Darcy and Burgers dataset generation as a pure function of DatasetMeta.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mgno/pdegen/grf.hpp"

namespace mgno::pde {

enum class PdeKind { darcy, burgers };

std::string_view to_string(PdeKind k);
PdeKind parse_pde_kind(std::string_view s);

struct DatasetMeta {
  PdeKind pde = PdeKind::darcy;
  std::size_t n_train = 100;
  std::size_t n_test = 100;
  std::size_t grid = 64;  // Darcy: nodes per side; Burgers: periodic points
  std::uint64_t seed = 0;
  GrfSpec grf;
  // Darcy constants.
  double a_hi = 12.0;
  double a_lo = 3.0;
  double forcing = 1.0;
  // Burgers constants.
  double nu = 0.1;
  double t_end = 1.0;

  std::size_t n_samples() const { return n_train + n_test; }
};

/// Defaults for the given equation, including its GRF constants.
DatasetMeta default_meta(PdeKind pde);

/// One named array with a leading sample axis.
struct Field {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t sample_size() const;
  const double* sample(std::size_t i) const { return data.data() + i * sample_size(); }
};

/// Train samples occupy indices [0, n_train), test samples follow.
struct Dataset {
  DatasetMeta meta;
  std::map<std::string, Field> fields;

  const Field& field(const std::string& name) const;
};

/// Throws std::invalid_argument on inconsistent meta.
void validate(const DatasetMeta& meta);

/// Seed stream of sample i of a split; train and test streams never coincide.
std::uint64_t sample_stream(bool test, std::size_t i);

/// Darcy fields: a (N x s x s), grad_a (N x 2 x s x s), u (N x s x s).
/// Burgers fields: u0 (N x n), u1 (N x n).
/// Solver failures are rethrown as std::runtime_error naming the sample index.
Dataset generate_dataset(const DatasetMeta& meta);

}  // namespace mgno::pde
