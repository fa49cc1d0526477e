/// @file params.hpp
/// @brief Named parameter storage, layout per model, and initialization.
///
/// MGNO cycle parameters are keyed by (role, scale, visit slot, iteration
/// slot), e.g. "in3.v1.t0.kernel.l2.weight". Intra-cycle sharing collapses
/// the visit slot to 0 and iteration sharing collapses the iteration slot to
/// 0, so the set of names directly realizes the sharing flags. The lift
/// ("lift.*") and projection ("proj.*") are never collapsed away.
///
/// Weight matrices are stored input-major (fan_in x fan_out) and applied as
/// x·W on row-vector node states.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mgno/diffcore/rng.hpp"
#include "mgno/diffcore/tensor.hpp"
#include "mgno/operators/config.hpp"

namespace mgno::ops {

enum class ParamKind { weight, bias };

struct ParamSpec {
  std::string name;
  diff::Shape shape;
  ParamKind kind;
};

class ParameterStore {
 public:
  void add(const std::string& name, diff::Tensor t);
  /// Throws std::out_of_range naming the missing parameter.
  const diff::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t total_elements() const;
  const std::map<std::string, diff::Tensor>& items() const { return params_; }

  void zero_grad();
  /// FNV-1a over names and raw parameter bytes.
  std::uint64_t hash() const;
  /// Deep copy of every tensor.
  ParameterStore clone() const;

 private:
  std::map<std::string, diff::Tensor> params_;
};

/// Name prefix of the kernel/local pair bound to an MGNO action.
std::string block_prefix(std::string_view role, std::size_t scale, std::size_t visit_slot,
                         std::size_t iteration_slot);

/// Every parameter of the model, in a fixed order (the initialization order).
std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg);

/// Exact number of scalars after slot collapsing.
std::size_t count_parameters(const ModelConfig& cfg);

/// Number of scalars in one KernelNet plus its local affine map.
std::size_t block_parameter_count(const ModelConfig& cfg);

/// Fill an m x n row-major buffer with a gain-scaled orthogonal matrix: the
/// smaller Gram product (WᵀW for m >= n, WWᵀ otherwise) equals gain² I.
void orthogonal_fill(std::span<double> out, std::size_t m, std::size_t n, diff::SeededRng& rng,
                     double gain);

/// Gaussian with standard deviation gain / sqrt(m) (fan-in m).
void kaiming_fill(std::span<double> out, std::size_t m, std::size_t n, diff::SeededRng& rng,
                  double gain);

/// Create every parameter: weights by the chosen scheme, biases zero.
ParameterStore init_parameters(const ModelConfig& cfg, diff::SeededRng& rng, InitKind init,
                               double gain);

}  // namespace mgno::ops
