#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "mgno/diffcore/gradcheck.hpp"
#include "mgno/diffcore/ops.hpp"
#include "mgno/training/ablation.hpp"
#include "mgno/training/adam.hpp"
#include "mgno/training/loss.hpp"
#include "mgno/training/problem.hpp"
#include "mgno/training/train.hpp"

using namespace mgno;
using namespace mgno::train;
using diff::Tensor;

namespace {

const pde::Dataset& tiny_darcy() {
  static const pde::Dataset data = [] {
    auto meta = pde::default_meta(pde::PdeKind::darcy);
    meta.n_train = 4;
    meta.n_test = 2;
    meta.grid = 16;
    meta.grf.resolution = 16;
    meta.seed = 3;
    return pde::generate_dataset(meta);
  }();
  return data;
}

const pde::Dataset& tiny_burgers() {
  static const pde::Dataset data = [] {
    auto meta = pde::default_meta(pde::PdeKind::burgers);
    meta.n_train = 3;
    meta.n_test = 2;
    meta.grid = 256;
    meta.grf.resolution = 256;
    return pde::generate_dataset(meta);
  }();
  return data;
}

ops::ModelConfig small(ops::ModelKind kind, std::size_t scales) {
  ops::ModelConfig c;
  c.kind = kind;
  c.scales = scales;
  c.depth = 2;
  c.width = 4;
  c.kernel_width = 4;
  c.mlp_width = 8;
  return c;
}

TrainConfig quick(std::size_t epochs, std::uint64_t seed = 0) {
  TrainConfig t;
  t.epochs = epochs;
  t.seed = seed;
  return t;
}

}  // namespace

TEST_CASE("relative L2 examples") {
  const std::vector<double> t = {1.0, -2.0, 3.0};
  CHECK(relative_l2(t, t) == 0.0);
  const std::vector<double> twice = {2.0, -4.0, 6.0};
  CHECK(relative_l2(twice, t) == doctest::Approx(1.0));
  CHECK(relative_l2(std::vector<double>{1, 0}, std::vector<double>{0, 1}) ==
        doctest::Approx(std::sqrt(2.0)));
  const std::vector<double> p = {0.5, 0.1, -2.0};
  std::vector<double> ps(3), ts(3);
  for (std::size_t i = 0; i < 3; ++i) {
    ps[i] = -7.5 * p[i];
    ts[i] = -7.5 * t[i];
  }
  CHECK(relative_l2(ps, ts) == doctest::Approx(relative_l2(p, t)).epsilon(1e-14));
  CHECK_THROWS_AS(relative_l2(p, std::vector<double>(3, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(relative_l2(p, std::vector<double>(2, 1.0)), std::invalid_argument);
}

TEST_CASE("differentiable loss equals the raw-unit relative error and has correct gradients") {
  const double mu = 0.3, sigma = 2.0;
  const Tensor pred({3, 1}, {0.1, -0.4, 0.9}), target({3, 1}, {0.0, -0.5, 1.0});
  std::vector<double> raw_pred(3), raw_truth(3);
  double norm = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    raw_pred[i] = pred.data()[i] * sigma + mu;
    raw_truth[i] = target.data()[i] * sigma + mu;
    norm += raw_truth[i] * raw_truth[i];
  }
  norm = std::sqrt(norm);
  CHECK(relative_l2_loss(pred, target, sigma, norm).item() ==
        doctest::Approx(relative_l2(raw_pred, raw_truth)).epsilon(1e-14));
  const auto report =
      diff::gradcheck([&] { return relative_l2_loss(pred, target, sigma, norm); }, {{"pred", pred}});
  CHECK(report.pass());
}

TEST_CASE("Adam first step moves by the learning rate against the gradient sign") {
  ops::ParameterStore p;
  p.add("w", Tensor({4}, {1.0, -2.0, 0.5, 3.0}, true));
  p.add("frozen", Tensor({2}, {5.0, 6.0}, true));
  Tensor w = p.get("w");
  const std::vector<double> g = {0.3, -7.0, 1e-3, 0.0};
  auto buf = w.impl()->grad_buffer();
  std::copy(g.begin(), g.end(), buf.begin());
  AdamState st;
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  adam_step(p, st, cfg);
  const std::vector<double> w0 = {1.0, -2.0, 0.5, 3.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const double sign = g[i] > 0 ? 1.0 : -1.0;
    CHECK(w.data()[i] == doctest::Approx(w0[i] - cfg.lr * sign).epsilon(1e-6));
  }
  CHECK(w.data()[3] == 3.0);
  CHECK(p.get("frozen").data()[0] == 5.0);
  CHECK(st.step == 1);
  CHECK(st.m.at("w").size() == 4);
}

TEST_CASE("Adam with zero gradient leaves parameters unchanged") {
  ops::ParameterStore p;
  p.add("w", Tensor({3}, {1.0, 2.0, 3.0}, true));
  Tensor w = p.get("w");
  w.impl()->grad_buffer();
  AdamState st;
  for (int i = 0; i < 5; ++i) adam_step(p, st, AdamConfig{});
  CHECK(std::vector<double>(w.data().begin(), w.data().end()) == std::vector<double>{1, 2, 3});
}

TEST_CASE("Adam minimizes a quadratic like a scalar reference implementation") {
  ops::ParameterStore p;
  p.add("w", Tensor({1}, {1.0}, true));
  Tensor w = p.get("w");
  AdamState st;
  const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    diff::Tape tape;
    {
      diff::TapeScope scope(tape);
      tape.backward(diff::sum_squares(w));
    }
    adam_step(p, st, cfg);
    p.zero_grad();
    const double g = 2.0 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  CHECK(w.data()[0] == doctest::Approx(x).epsilon(1e-12));
  CHECK(std::abs(w.data()[0]) < 1e-2);
}

TEST_CASE("Adam rejects non-finite gradients naming the parameter") {
  ops::ParameterStore p;
  p.add("a", Tensor({2}, {1.0, 1.0}, true));
  p.add("b.weight", Tensor({2}, {1.0, 1.0}, true));
  Tensor a = p.get("a"), b = p.get("b.weight");
  a.impl()->grad_buffer()[0] = 1.0;
  b.impl()->grad_buffer()[1] = std::numeric_limits<double>::quiet_NaN();
  AdamState st;
  CHECK_THROWS_WITH_AS(adam_step(p, st, AdamConfig{}), doctest::Contains("b.weight"),
                       NonFiniteGradient);
  CHECK(a.data()[0] == 1.0);
  CHECK(st.step == 0);
}

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(validate(t));
  t.epochs = 0;
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
  t = TrainConfig{};
  t.lr = 0.0;
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
  t = TrainConfig{};
  t.batch_size = 0;
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
  CHECK(TrainConfig{}.gain == doctest::Approx(std::sqrt(2.0)));
  CHECK(TrainConfig{}.lr == 1e-3);
  CHECK(TrainConfig{}.epochs == 200);
}

TEST_CASE("default scale specs") {
  const auto d = default_scale_specs(pde::PdeKind::darcy, 4);
  REQUIRE(d.size() == 4);
  CHECK(d[0].n_nodes == 256);
  CHECK(d[3].n_nodes == 4);
  CHECK(d[1].radius_intra == 0.2);
  CHECK(d[0].radius_cross == d[1].radius_intra);
  const auto b = default_scale_specs(pde::PdeKind::burgers, 2);
  CHECK(b[0].radius_intra == doctest::Approx(2 * std::numbers::pi * 0.05));
  CHECK(b[0].radius_cross == b[1].radius_intra);
  CHECK_THROWS_AS(default_scale_specs(pde::PdeKind::darcy, 0), std::invalid_argument);
  CHECK_THROWS_AS(default_scale_specs(pde::PdeKind::darcy, 5), std::invalid_argument);
}

TEST_CASE("prepared problems are normalized and deterministic") {
  const auto& data = tiny_darcy();
  const auto pb = prepare_problem(data, 2, 7);
  CHECK(pb.train.size() == 4);
  CHECK(pb.test.size() == 2);
  CHECK(pb.input_features() == 5);
  CHECK(pb.edge_features() == 10);
  // Train-split features are standardized per channel.
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0, ss = 0.0, n = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto g = sample_grid(data, i);
      for (std::size_t p = 0; p < g.n_points(); ++p) {
        const double z = (g.values[p * 3 + c] - pb.feature_mean[c]) / pb.feature_std[c];
        s += z;
        ss += z * z;
        n += 1.0;
      }
    }
    CHECK(std::abs(s / n) < 1e-10);
    CHECK(ss / n == doctest::Approx(1.0).epsilon(1e-10));
  }
  const auto& s0 = pb.train[0];
  REQUIRE(s0.graph.n_scales() == 2);
  const auto u = sample_solution(data, 0);
  for (std::size_t k = 0; k < s0.truth.size(); ++k) {
    CHECK(s0.truth[k] == u[s0.graph.levels[0].grid_index[k]]);
    CHECK(s0.target.data()[k] * pb.target_std + pb.target_mean ==
          doctest::Approx(s0.truth[k]).epsilon(1e-12));
  }
  const auto again = prepare_problem(data, 2, 7);
  CHECK(again.train[1].graph.levels[0].grid_index == pb.train[1].graph.levels[0].grid_index);
  CHECK(again.test[0].graph.down[0].src == pb.test[0].graph.down[0].src);
  const auto other = prepare_problem(data, 2, 8);
  CHECK(other.train[1].graph.levels[0].grid_index != pb.train[1].graph.levels[0].grid_index);
  CHECK(pb.train[0].graph.levels[0].grid_index != pb.test[0].graph.levels[0].grid_index);
}

TEST_CASE("Burgers problems use the periodic circle") {
  const auto pb = prepare_problem(tiny_burgers(), 1, 0);
  CHECK(pb.dim == 1);
  CHECK(pb.input_features() == 2);
  CHECK(pb.edge_features() == 4);
  CHECK(pb.train[0].graph.domain.metric == graph::Metric::periodic);
  CHECK(pb.train[0].graph.domain.upper == doctest::Approx(2 * std::numbers::pi));
}

TEST_CASE("one epoch takes one optimizer step per training sample") {
  const auto pb = prepare_problem(tiny_darcy(), 2, 0);
  const auto res = train_model(small(ops::ModelKind::mgno, 2), pb, quick(1));
  CHECK(res.optimizer_steps == 4);
  CHECK(res.history.size() == 1);
  CHECK(res.history[0].test_error.has_value());
  CHECK(std::isfinite(res.row.train_error));
  CHECK(res.row.n_seeds == 1);
  CHECK_FALSE(res.row.train_std.has_value());
  CHECK(res.row.n_params == ops::count_parameters(bind_dimensions(small(ops::ModelKind::mgno, 2), pb)));
  auto batched = quick(1);
  batched.batch_size = 3;
  CHECK(train_model(small(ops::ModelKind::mgno, 2), pb, batched).optimizer_steps == 2);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const auto pb = prepare_problem(tiny_darcy(), 1, 1);
  for (auto kind : {ops::ModelKind::mlp, ops::ModelKind::gcn, ops::ModelKind::gno}) {
    const auto a = train_model(small(kind, 1), pb, quick(3, 1));
    const auto b = train_model(small(kind, 1), pb, quick(3, 1));
    CHECK(a.row.train_error == b.row.train_error);
    CHECK(a.row.test_error == b.row.test_error);
    CHECK(a.checkpoint_hash == b.checkpoint_hash);
    CHECK(a.config_hash == b.config_hash);
    const auto c = train_model(small(kind, 1), pb, quick(3, 2));
    CHECK(a.checkpoint_hash != c.checkpoint_hash);
  }
}

TEST_CASE("evaluation leaves the checkpoint untouched") {
  const auto pb = prepare_problem(tiny_darcy(), 2, 0);
  const auto cfg = bind_dimensions(small(ops::ModelKind::mgno, 2), pb);
  const auto res = train_model(cfg, pb, quick(1));
  const double e1 = evaluate(cfg, res.checkpoint, pb, pb.test);
  CHECK(res.checkpoint.hash() == res.checkpoint_hash);
  CHECK(evaluate(cfg, res.checkpoint, pb, pb.test) == e1);
  CHECK(e1 == res.row.test_error);
}

TEST_CASE("two-scale cycles train identically") {
  const auto pb = prepare_problem(tiny_darcy(), 2, 4);
  std::vector<TrainResult> results;
  for (auto c : {ops::CycleKind::v, ops::CycleKind::f, ops::CycleKind::w}) {
    auto cfg = small(ops::ModelKind::mgno, 2);
    cfg.cycle = c;
    results.push_back(train_model(cfg, pb, quick(2, 4)));
  }
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(results[i].row.train_error == results[0].row.train_error);
    CHECK(results[i].row.test_error == results[0].row.test_error);
    CHECK(results[i].row.n_params == results[0].row.n_params);
    CHECK(results[i].checkpoint_hash == results[0].checkpoint_hash);
  }
}

TEST_CASE("a non-finite loss aborts with the epoch index") {
  auto pb = prepare_problem(tiny_darcy(), 1, 0);
  auto& attr = pb.train[2].graph.levels[0].intra.attr;
  attr[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train_model(small(ops::ModelKind::gno, 1), pb, quick(2));
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch() == 1);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("model and problem dimensionalities must agree") {
  const auto pb = prepare_problem(tiny_darcy(), 2, 0);
  auto cfg = small(ops::ModelKind::mgno, 3);
  CHECK_THROWS_AS(train_model(cfg, pb, quick(1)), std::invalid_argument);
  cfg = small(ops::ModelKind::mgno, 2);
  cfg.input_features = 2;
  CHECK_THROWS_AS(train_model(cfg, pb, quick(1)), std::invalid_argument);
}

TEST_CASE("mean and sample standard deviation") {
  auto [m1, s1] = mean_std({0.5});
  CHECK(m1 == 0.5);
  CHECK_FALSE(s1.has_value());
  auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("ablation grid rows") {
  ProblemCache cache(tiny_darcy());
  const auto tc = quick(1);
  SUBCASE("singleton grid with one seed has no std") {
    GridOptions o;
    o.seeds = {0};
    o.workers = 1;
    const auto rows = run_ablation_grid({small(ops::ModelKind::gno, 1)}, cache, tc, o);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ok());
    CHECK(rows[0].n_seeds == 1);
    CHECK_FALSE(rows[0].train_std.has_value());
  }
  SUBCASE("two-scale cycles give identical rows and the table order holds") {
    std::vector<ops::ModelConfig> cells;
    for (auto c : {ops::CycleKind::w, ops::CycleKind::f, ops::CycleKind::v}) {
      auto cfg = small(ops::ModelKind::mgno, 2);
      cfg.cycle = c;
      cells.push_back(cfg);
    }
    cells.push_back(small(ops::ModelKind::mlp, 1));
    GridOptions o;
    o.seeds = {0, 1};
    o.workers = 2;
    std::size_t runs = 0;
    o.on_run = [&](const ops::ModelConfig&, const MetricsRow&, std::uint64_t) { ++runs; };
    const auto rows = run_ablation_grid(cells, cache, tc, o);
    CHECK(runs == 8);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].method == "MLP");
    CHECK(rows[1].method == "V-MGNO");
    CHECK(rows[2].method == "F-MGNO");
    CHECK(rows[3].method == "W-MGNO");
    for (std::size_t i = 2; i < 4; ++i) {
      CHECK(rows[i].train_error == rows[1].train_error);
      CHECK(rows[i].test_error == rows[1].test_error);
      CHECK(rows[i].seed_train_errors == rows[1].seed_train_errors);
    }
    CHECK(rows[1].n_seeds == 2);
    CHECK(rows[1].train_std.has_value());
  }
  SUBCASE("a failing cell is recorded and the grid continues") {
    auto bad = small(ops::ModelKind::gno, 2);
    GridOptions o;
    o.seeds = {0};
    o.workers = 1;
    const auto rows = run_ablation_grid({bad, small(ops::ModelKind::mlp, 1)}, cache, tc, o);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].ok());
    CHECK_FALSE(rows[1].ok());
    CHECK(rows[1].n_seeds == 0);
    CHECK(rows[1].failure.find("single-scale") != std::string::npos);
  }
}

TEST_CASE("worker count comes from the environment") {
  setenv("MGNO_WORKERS", "3", 1);
  CHECK(workers_from_env() == 3);
  setenv("MGNO_WORKERS", "zero", 1);
  CHECK(workers_from_env() == 1);
  unsetenv("MGNO_WORKERS");
  CHECK(workers_from_env() == 1);
}

TEST_CASE("repeated multi-scale training is bit-identical regardless of heap state") {
  const auto pb = prepare_problem(tiny_darcy(), 3, 2);
  auto cfg = small(ops::ModelKind::mgno, 3);
  cfg.width = 16;
  cfg.kernel_width = 16;
  std::vector<std::uint64_t> hashes;
  std::vector<std::vector<double>> ballast;
  for (std::size_t r = 0; r < 3; ++r) {
    // Shift later allocations to different offsets.
    ballast.emplace_back(3 + 5 * r, 1.0);
    hashes.push_back(train_model(cfg, pb, quick(1, 2)).checkpoint_hash);
  }
  CHECK(hashes[1] == hashes[0]);
  CHECK(hashes[2] == hashes[0]);
}
