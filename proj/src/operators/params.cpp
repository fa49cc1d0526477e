#include "mgno/operators/params.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

#include "mgno/operators/schedule.hpp"

namespace mgno::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void add_linear(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in,
                std::size_t outw, bool bias = true) {
  out.push_back({prefix + ".weight", {in, outw}, ParamKind::weight});
  if (bias) out.push_back({prefix + ".bias", {outw}, ParamKind::bias});
}

void add_block(std::vector<ParamSpec>& out, const std::string& prefix, const ModelConfig& cfg) {
  const std::size_t k = cfg.kernel_width, w = cfg.width;
  add_linear(out, prefix + ".kernel.l1", cfg.edge_features, k);
  add_linear(out, prefix + ".kernel.l2", k, k);
  add_linear(out, prefix + ".kernel.l3", k, w * w);
  add_linear(out, prefix + ".local", w, w);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void ParameterStore::add(const std::string& name, diff::Tensor t) {
  if (!params_.emplace(name, std::move(t)).second) {
    throw std::invalid_argument("parameter store: duplicate parameter '" + name + "'");
  }
}

const diff::Tensor& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("parameter binding: no parameter named '" + name + "'");
  }
  return it->second;
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) {
    diff::Tensor h = t;
    h.zero_grad();
  }
}

std::uint64_t ParameterStore::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : params_) {
    h = fnv1a(h, name.data(), name.size());
    h = fnv1a(h, t.data().data(), t.numel() * sizeof(double));
  }
  return h;
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const auto& [name, t] : params_) {
    diff::Tensor c = t.detach_copy();
    c.set_requires_grad(t.requires_grad());
    out.add(name, std::move(c));
  }
  return out;
}

std::string block_prefix(std::string_view role, std::size_t scale, std::size_t visit_slot,
                         std::size_t iteration_slot) {
  return std::string(role) + std::to_string(scale) + ".v" + std::to_string(visit_slot) + ".t" +
         std::to_string(iteration_slot);
}

std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg) {
  validate(cfg);
  std::vector<ParamSpec> out;
  const std::size_t w = cfg.width;
  switch (cfg.kind) {
    case ModelKind::mlp: {
      std::size_t in = cfg.input_features;
      for (std::size_t l = 0; l < cfg.mlp_depth; ++l) {
        const std::size_t o = l + 1 == cfg.mlp_depth ? 1 : cfg.mlp_width;
        add_linear(out, "mlp.l" + std::to_string(l + 1), in, o);
        in = o;
      }
      return out;
    }
    case ModelKind::gcn:
      add_linear(out, "lift", cfg.input_features, w);
      for (std::size_t l = 0; l < cfg.gcn_depth; ++l) {
        add_linear(out, "gcn.l" + std::to_string(l + 1), w, w, /*bias=*/false);
      }
      add_linear(out, "proj", w, 1);
      return out;
    case ModelKind::gno:
      add_linear(out, "lift", cfg.input_features, w);
      add_block(out, "gno", cfg);
      add_linear(out, "proj", w, 1);
      return out;
    case ModelKind::mgno: {
      add_linear(out, "lift", cfg.input_features, w);
      const auto schedule = generate_schedule(cfg.cycle, cfg.scales);
      const std::size_t iteration_slots = cfg.iteration_sharing ? 1 : cfg.depth;
      std::set<std::string> seen;
      for (std::size_t t = 0; t < iteration_slots; ++t) {
        for (const auto& a : schedule.actions) {
          const std::size_t visit = cfg.intra_cycle_sharing ? 0 : a.visit;
          const auto prefix = block_prefix(to_string(a.role), a.scale, visit, t);
          if (seen.insert(prefix).second) add_block(out, prefix, cfg);
        }
      }
      add_linear(out, "proj", w, 1);
      return out;
    }
  }
  return out;
}

std::size_t count_parameters(const ModelConfig& cfg) {
  std::size_t n = 0;
  for (const auto& spec : parameter_layout(cfg)) n += diff::shape_numel(spec.shape);
  return n;
}

std::size_t block_parameter_count(const ModelConfig& cfg) {
  const std::size_t e = cfg.edge_features, k = cfg.kernel_width, w = cfg.width;
  return e * k + k + k * k + k + k * w * w + w * w + w * w + w;
}

void orthogonal_fill(std::span<double> out, std::size_t m, std::size_t n, diff::SeededRng& rng,
                     double gain) {
  if (out.size() != m * n) throw std::invalid_argument("orthogonal_fill: buffer size mismatch");
  const bool tall = m >= n;
  const std::size_t rows = tall ? m : n, cols = tall ? n : m;
  RowMat g(rows, cols);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<RowMat> qr(g);
  RowMat q = qr.householderQ() * RowMat::Identity(rows, cols);
  const RowMat r = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < cols; ++j) {
    const double d = r(j, j);
    if (d < 0.0) q.col(j) *= -1.0;
  }
  q *= gain;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = tall ? q(i, j) : q(j, i);
}

void kaiming_fill(std::span<double> out, std::size_t m, std::size_t n, diff::SeededRng& rng,
                  double gain) {
  if (out.size() != m * n) throw std::invalid_argument("kaiming_fill: buffer size mismatch");
  const double std_dev = gain / std::sqrt(static_cast<double>(m));
  for (auto& v : out) v = std_dev * rng.normal();
}

ParameterStore init_parameters(const ModelConfig& cfg, diff::SeededRng& rng, InitKind init,
                               double gain) {
  if (!(gain > 0.0)) throw std::invalid_argument("init_parameters: gain must be positive");
  ParameterStore store;
  for (const auto& spec : parameter_layout(cfg)) {
    diff::Tensor t = diff::Tensor::zeros(spec.shape, /*requires_grad=*/true);
    if (spec.kind == ParamKind::weight) {
      const std::size_t m = spec.shape[0], n = spec.shape[1];
      if (init == InitKind::orthogonal) {
        orthogonal_fill(t.mutable_data(), m, n, rng, gain);
      } else {
        kaiming_fill(t.mutable_data(), m, n, rng, gain);
      }
    }
    store.add(spec.name, std::move(t));
  }
  return store;
}

}  // namespace mgno::ops
