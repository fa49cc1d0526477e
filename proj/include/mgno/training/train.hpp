/// @file train.hpp
/// @brief Training loop, evaluation, and metrics rows.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgno/operators/config.hpp"
#include "mgno/operators/params.hpp"
#include "mgno/training/adam.hpp"
#include "mgno/training/problem.hpp"

namespace mgno::train {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  ops::InitKind init = ops::InitKind::orthogonal;
  double gain = 1.4142135623730951;
  std::uint64_t seed = 0;
  std::size_t batch_size = 1;
  /// Evaluate the test split every this many epochs; 0 evaluates only after the last epoch.
  std::size_t eval_every = 1;
};

/// Throws std::invalid_argument for lr <= 0, epochs == 0, batch_size == 0, or bad Adam constants.
void validate(const TrainConfig& cfg);

/// Loss went non-finite; carries the (1-based) epoch where it happened.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct MetricsRow {
  std::string method;
  ops::ModelKind kind = ops::ModelKind::mgno;
  ops::CycleKind cycle = ops::CycleKind::v;
  std::size_t scales = 1;
  std::size_t depth = 0;
  bool intra_cycle_sharing = true;
  bool iteration_sharing = true;
  bool skip_connections = true;
  double train_error = 0.0;
  std::optional<double> train_std;
  double test_error = 0.0;
  std::optional<double> test_std;
  double seconds_per_epoch = 0.0;
  std::size_t n_params = 0;
  std::size_t n_seeds = 0;
  /// Empty on success, otherwise the failure message.
  std::string failure;
  std::vector<double> seed_train_errors, seed_test_errors;

  bool ok() const { return failure.empty(); }
};

struct EpochLog {
  double train_error = 0.0;
  std::optional<double> test_error;
  double seconds = 0.0;
};

struct TrainResult {
  MetricsRow row;
  ops::ParameterStore checkpoint;
  std::uint64_t checkpoint_hash = 0;
  std::uint64_t config_hash = 0;
  std::vector<EpochLog> history;
  std::size_t optimizer_steps = 0;
};

/// Fill in input/edge feature counts from the problem and check consistency.
ops::ModelConfig bind_dimensions(ops::ModelConfig cfg, const Problem& pb);

/// Canonical text of a (model, train) configuration; stable across runs.
std::string config_key(const ops::ModelConfig& model, const TrainConfig& train);

std::uint64_t fnv1a(std::string_view text);

MetricsRow describe(const ops::ModelConfig& cfg);

/// Mean relative L2 error over samples without recording gradients.
double evaluate(const ops::ModelConfig& cfg, const ops::ParameterStore& params, const Problem& pb,
                const std::vector<PreparedSample>& samples);

/// Train one model. The problem must have been prepared with cfg.scales scales.
TrainResult train_model(const ops::ModelConfig& cfg, const Problem& pb, const TrainConfig& tc);

}  // namespace mgno::train
