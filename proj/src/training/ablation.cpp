#include "mgno/training/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <tuple>

namespace mgno::train {

std::shared_ptr<const Problem> ProblemCache::get(std::size_t scales, std::uint64_t seed) {
  const Key key{scales, seed};
  {
    std::lock_guard lock(mu_);
    if (auto it = live_.find(key); it != live_.end()) {
      if (auto p = it->second.lock()) return p;
    }
  }
  // Built outside the lock; a concurrent duplicate build is wasted work but harmless.
  auto built = std::make_shared<const Problem>(prepare_problem(data_, scales, seed));
  std::lock_guard lock(mu_);
  if (auto p = live_[key].lock()) return p;
  live_[key] = built;
  recent_.push_front(built);
  while (recent_.size() > keep_) recent_.pop_back();
  return built;
}

std::size_t workers_from_env() {
  if (const char* env = std::getenv("MGNO_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return std::size_t(n);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::pair<double, std::optional<double>> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, std::nullopt};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= double(xs.size());
  if (xs.size() < 2) return {mean, std::nullopt};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / double(xs.size() - 1))};
}

void sort_rows(std::vector<MetricsRow>& rows) {
  auto key = [](const MetricsRow& r) {
    return std::make_tuple(int(r.kind), r.kind == ops::ModelKind::mgno ? int(r.cycle) : 0, r.scales,
                           !r.intra_cycle_sharing, !r.iteration_sharing, !r.skip_connections,
                           r.depth);
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const MetricsRow& a, const MetricsRow& b) { return key(a) < key(b); });
}

std::vector<MetricsRow> run_ablation_grid(const std::vector<ops::ModelConfig>& cells,
                                          ProblemCache& problems, const TrainConfig& base,
                                          const GridOptions& opts) {
  validate(base);
  if (opts.seeds.empty()) throw std::invalid_argument("ablation grid: no seeds");
  struct Task {
    std::size_t cell;
    std::uint64_t seed;
  };
  // Seed-major order keeps the problem cache warm.
  std::vector<Task> tasks;
  for (auto seed : opts.seeds) {
    for (std::size_t c = 0; c < cells.size(); ++c) tasks.push_back({c, seed});
  }
  std::stable_sort(tasks.begin(), tasks.end(), [&](const Task& a, const Task& b) {
    return std::make_pair(a.seed, cells[a.cell].scales) <
           std::make_pair(b.seed, cells[b.cell].scales);
  });

  struct Outcome {
    std::optional<MetricsRow> row;
    std::string failure;
  };
  std::vector<Outcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const auto& task = tasks[t];
      TrainConfig tc = base;
      tc.seed = task.seed;
      try {
        auto pb = problems.get(cells[task.cell].scales, task.seed);
        outcomes[t].row = train_model(cells[task.cell], *pb, tc).row;
        if (opts.on_run) {
          std::lock_guard lock(report_mu);
          opts.on_run(cells[task.cell], *outcomes[t].row, task.seed);
        }
      } catch (const std::exception& e) {
        outcomes[t].failure = "seed " + std::to_string(task.seed) + ": " + e.what();
      }
    }
  };
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(tasks.size(), opts.workers ? opts.workers : workers_from_env()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<MetricsRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    MetricsRow row;
    try {
      row = describe(cells[c]);
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    std::vector<std::string> failures;
    double seconds = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].cell != c) continue;
      if (!outcomes[t].row) {
        failures.push_back(outcomes[t].failure);
        continue;
      }
      const auto& r = *outcomes[t].row;
      row.seed_train_errors.push_back(r.train_error);
      row.seed_test_errors.push_back(r.test_error);
      seconds += r.seconds_per_epoch;
      row.n_params = r.n_params;
    }
    row.n_seeds = row.seed_train_errors.size();
    std::tie(row.train_error, row.train_std) = mean_std(row.seed_train_errors);
    std::tie(row.test_error, row.test_std) = mean_std(row.seed_test_errors);
    if (row.n_seeds) row.seconds_per_epoch = seconds / double(row.n_seeds);
    for (const auto& f : failures) row.failure += (row.failure.empty() ? "" : "; ") + f;
    rows.push_back(std::move(row));
  }
  sort_rows(rows);
  return rows;
}

}  // namespace mgno::train
