/// @file ablation.hpp
/// @brief Grid runner: every (cell x seed) trained, aggregated into one row per cell.

#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "mgno/pdegen/dataset.hpp"
#include "mgno/training/train.hpp"

namespace mgno::train {

/// Builds problems on demand and keeps the most recently used ones alive.
/// Safe to call from several workers.
class ProblemCache {
 public:
  explicit ProblemCache(const pde::Dataset& data, std::size_t keep = 2) : data_(data), keep_(keep) {}
  std::shared_ptr<const Problem> get(std::size_t scales, std::uint64_t seed);

 private:
  using Key = std::pair<std::size_t, std::uint64_t>;
  const pde::Dataset& data_;
  std::size_t keep_;
  std::mutex mu_;
  std::map<Key, std::weak_ptr<const Problem>> live_;
  std::list<std::shared_ptr<const Problem>> recent_;
};

struct GridOptions {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
  /// 0 reads MGNO_WORKERS (default 1).
  std::size_t workers = 0;
  /// Called after each (cell, seed) finishes; serialized.
  std::function<void(const ops::ModelConfig& cell, const MetricsRow& run, std::uint64_t seed)> on_run;
};

/// Worker count from MGNO_WORKERS, at least 1.
std::size_t workers_from_env();

/// Mean and sample standard deviation (absent for fewer than 2 values).
std::pair<double, std::optional<double>> mean_std(const std::vector<double>& xs);

/// Table order: MLP, GCN, GNO, then MGNO by cycle V, F, W; then scales, sharing flags, skip.
void sort_rows(std::vector<MetricsRow>& rows);

/// Train every (cell x seed). A failing run marks its row failed and the grid continues.
std::vector<MetricsRow> run_ablation_grid(const std::vector<ops::ModelConfig>& cells,
                                          ProblemCache& problems, const TrainConfig& base,
                                          const GridOptions& opts);

}  // namespace mgno::train
