#include "mgno/training/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mgno/diffcore/ops.hpp"
#include "mgno/operators/models.hpp"
#include "mgno/training/loss.hpp"

namespace mgno::train {

namespace {

constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kShuffleStream = 0x2000;

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(cfg.lr > 0.0)) fail("learning rate must be > 0");
  if (cfg.epochs < 1) fail("epochs must be >= 1");
  if (cfg.batch_size < 1) fail("samples per step must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (!(cfg.eps > 0.0)) fail("eps must be > 0");
  if (!(cfg.gain > 0.0)) fail("init gain must be > 0");
}

ops::ModelConfig bind_dimensions(ops::ModelConfig cfg, const Problem& pb) {
  if (cfg.input_features != 0 && cfg.input_features != pb.input_features()) {
    throw std::invalid_argument("model expects " + std::to_string(cfg.input_features) +
                                " input features, dataset provides " +
                                std::to_string(pb.input_features()));
  }
  if (cfg.edge_features != 0 && cfg.edge_features != pb.edge_features()) {
    throw std::invalid_argument("model expects " + std::to_string(cfg.edge_features) +
                                " edge features, dataset provides " +
                                std::to_string(pb.edge_features()));
  }
  if (cfg.scales != pb.scales) {
    throw std::invalid_argument("model has " + std::to_string(cfg.scales) +
                                " scales, problem graphs have " + std::to_string(pb.scales));
  }
  cfg.input_features = pb.input_features();
  cfg.edge_features = pb.edge_features();
  return cfg;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_key(const ops::ModelConfig& m, const TrainConfig& t) {
  std::string k;
  k += "model=" + std::string(ops::to_string(m.kind));
  k += ";cycle=" + std::string(ops::to_string(m.cycle));
  k += ";scales=" + std::to_string(m.scales);
  k += ";depth=" + std::to_string(m.depth);
  k += ";intra_share=" + std::to_string(int(m.intra_cycle_sharing));
  k += ";iter_share=" + std::to_string(int(m.iteration_sharing));
  k += ";skip=" + std::to_string(int(m.skip_connections));
  k += ";width=" + std::to_string(m.width);
  k += ";kwidth=" + std::to_string(m.kernel_width);
  k += ";mlp=" + std::to_string(m.mlp_depth) + "x" + std::to_string(m.mlp_width);
  k += ";gcn_depth=" + std::to_string(m.gcn_depth);
  k += ";lr=" + fmt_double(t.lr);
  k += ";epochs=" + std::to_string(t.epochs);
  k += ";adam=" + fmt_double(t.beta1) + "," + fmt_double(t.beta2) + "," + fmt_double(t.eps);
  k += ";init=" + std::string(ops::to_string(t.init));
  k += ";gain=" + fmt_double(t.gain);
  k += ";batch=" + std::to_string(t.batch_size);
  k += ";seed=" + std::to_string(t.seed);
  return k;
}

MetricsRow describe(const ops::ModelConfig& cfg) {
  MetricsRow row;
  row.method = ops::method_name(cfg);
  row.kind = cfg.kind;
  row.cycle = cfg.cycle;
  row.scales = cfg.scales;
  row.depth = cfg.depth;
  row.intra_cycle_sharing = cfg.intra_cycle_sharing;
  row.iteration_sharing = cfg.iteration_sharing;
  row.skip_connections = cfg.skip_connections;
  return row;
}

double evaluate(const ops::ModelConfig& cfg, const ops::ParameterStore& params, const Problem& pb,
                const std::vector<PreparedSample>& samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> pred;
  for (const auto& s : samples) {
    const auto out = ops::forward(cfg, params, s.graph);
    const auto v = out.data();
    pred.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) pred[i] = v[i] * pb.target_std + pb.target_mean;
    total += relative_l2(pred, s.truth);
  }
  return total / double(samples.size());
}

TrainResult train_model(const ops::ModelConfig& model, const Problem& pb, const TrainConfig& tc) {
  validate(tc);
  const auto cfg = bind_dimensions(model, pb);
  ops::validate(cfg);
  if (pb.train.empty()) throw std::invalid_argument("train_model: empty train split");

  TrainResult res;
  res.config_hash = fnv1a(config_key(cfg, tc));
  diff::SeededRng init_rng(tc.seed, kInitStream);
  auto params = ops::init_parameters(cfg, init_rng, tc.init, tc.gain);
  diff::SeededRng shuffle_rng(tc.seed, kShuffleStream);
  const AdamConfig adam{tc.lr, tc.beta1, tc.beta2, tc.eps};
  AdamState state;

  std::vector<std::size_t> order(pb.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total_seconds = 0.0;

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t stop = std::min(order.size(), start + tc.batch_size);
      const double weight = 1.0 / double(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const auto& s = pb.train[order[b]];
        diff::Tape tape;
        diff::TapeScope scope(tape);
        const auto pred = ops::forward(cfg, params, s.graph);
        const auto loss = relative_l2_loss(pred, s.target, pb.target_std, s.truth_norm);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) +
                                     " (train sample " + std::to_string(order[b]) + ")",
                                 epoch);
        }
        loss_sum += value;
        tape.backward(weight == 1.0 ? loss : diff::scale(loss, weight));
      }
      try {
        adam_step(params, state, adam);
      } catch (const NonFiniteGradient& e) {
        throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch), epoch);
      }
      params.zero_grad();
      ++res.optimizer_steps;
    }
    EpochLog log;
    log.seconds = seconds_since(t0);
    total_seconds += log.seconds;
    log.train_error = loss_sum / double(order.size());
    const bool eval_now =
        epoch == tc.epochs || (tc.eval_every > 0 && epoch % tc.eval_every == 0);
    if (eval_now) log.test_error = evaluate(cfg, params, pb, pb.test);
    res.history.push_back(log);
  }

  res.row = describe(cfg);
  res.row.train_error = res.history.back().train_error;
  res.row.test_error = res.history.back().test_error.value_or(0.0);
  res.row.seconds_per_epoch = total_seconds / double(tc.epochs);
  res.row.n_params = params.total_elements();
  res.row.n_seeds = 1;
  res.row.seed_train_errors = {res.row.train_error};
  res.row.seed_test_errors = {res.row.test_error};
  res.checkpoint_hash = params.hash();
  res.checkpoint = std::move(params);
  return res;
}

}  // namespace mgno::train
