#include "mgno/operators/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgno::ops {

using diff::Index;
using diff::Tensor;

namespace {

Tensor attribute_tensor(const graph::EdgeList& edges) {
  return Tensor({edges.size(), edges.attr_width}, edges.attr);
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return diff::affine(x, weight, bias);
}

diff::CsrMatrix make_mean_operator(const graph::EdgeList& edges, std::size_t n_src,
                                   std::size_t n_tgt) {
  diff::CsrMatrix a;
  a.rows = n_tgt;
  a.cols = n_src;
  a.row_ptr.assign(n_tgt + 1, 0);
  for (auto t : edges.tgt) {
    if (t >= n_tgt) throw diff::ShapeError("message_pass: edge target out of range");
    ++a.row_ptr[t + 1];
  }
  for (std::size_t t = 0; t < n_tgt; ++t) a.row_ptr[t + 1] += a.row_ptr[t];
  a.col.resize(edges.size());
  a.value.resize(edges.size());
  std::vector<std::size_t> fill(a.row_ptr.begin(), a.row_ptr.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto t = edges.tgt[e];
    const double count = static_cast<double>(a.row_ptr[t + 1] - a.row_ptr[t]);
    a.col[fill[t]] = edges.src[e];
    a.value[fill[t]++] = 1.0 / count;
  }
  return a;
}

Tensor regroup(const Tensor& t, std::vector<Index> map, diff::Shape shape) {
  return diff::gather_elements(t, map, std::move(shape));
}

Tensor make_source_table(const KernelNet& kn) {
  const std::size_t k = kn.hidden(), w = kn.width();
  std::vector<Index> map(w * k * w);
  for (std::size_t b = 0; b < w; ++b)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t a = 0; a < w; ++a)
        map[b * k * w + j * w + a] = static_cast<Index>(j * w * w + a * w + b);
  return regroup(kn.l3_weight, std::move(map), {w, k * w});
}

Tensor make_target_table(const KernelNet& kn) {
  const std::size_t k = kn.hidden(), w = kn.width();
  std::vector<Index> map(k * w * w);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t b = 0; b < w; ++b)
      for (std::size_t a = 0; a < w; ++a)
        map[(j * w + b) * w + a] = static_cast<Index>(j * w * w + a * w + b);
  return regroup(kn.l3_weight, std::move(map), {k * w, w});
}

Tensor make_bias_matrix(const KernelNet& kn) {
  const std::size_t w = kn.width();
  std::vector<Index> map(w * w);
  for (std::size_t b = 0; b < w; ++b)
    for (std::size_t a = 0; a < w; ++a) map[b * w + a] = static_cast<Index>(a * w + b);
  return regroup(kn.l3_bias, std::move(map), {w, w});
}

void require_single_scale(const graph::MultiScaleGraph& g, const char* model) {
  if (g.n_scales() != 1) {
    throw std::invalid_argument(std::string(model) + ": expects a single-scale graph, got " +
                                std::to_string(g.n_scales()) + " scales");
  }
}

}  // namespace

std::size_t KernelNet::width() const {
  const auto w = static_cast<std::size_t>(std::llround(std::sqrt(double(l3_weight.cols()))));
  if (w * w != l3_weight.cols()) {
    throw diff::ShapeError("kernel: last layer width " + std::to_string(l3_weight.cols()) +
                           " is not a square");
  }
  return w;
}

KernelNet bind_kernel(const ParameterStore& p, const std::string& prefix) {
  const std::string k = prefix + ".kernel.";
  return KernelNet{p.get(k + "l1.weight"), p.get(k + "l1.bias"), p.get(k + "l2.weight"),
                   p.get(k + "l2.bias"),   p.get(k + "l3.weight"), p.get(k + "l3.bias")};
}

AffineLocal bind_local(const ParameterStore& p, const std::string& prefix) {
  return AffineLocal{p.get(prefix + ".local.weight"), p.get(prefix + ".local.bias")};
}

const Tensor& MessageCache::attributes(const graph::EdgeList& edges) {
  auto [it, fresh] = attrs_.try_emplace(&edges);
  if (fresh) it->second = attribute_tensor(edges);
  return it->second;
}

const Tensor& MessageCache::hidden(const KernelNet& kernel, const graph::EdgeList& edges) {
  auto [it, fresh] = hidden_.try_emplace({kernel.l1_weight.impl().get(), &edges});
  if (fresh) it->second = kernel_hidden(kernel, attributes(edges));
  return it->second;
}

const diff::CsrMatrix& MessageCache::mean_operator(const graph::EdgeList& edges,
                                                  std::size_t n_src, std::size_t n_tgt) {
  auto [it, fresh] = mean_.try_emplace(&edges);
  if (fresh) it->second = make_mean_operator(edges, n_src, n_tgt);
  if (it->second.rows != n_tgt || it->second.cols != n_src) {
    throw diff::ShapeError("message_pass: edge set reused with different node counts");
  }
  return it->second;
}

const Tensor& MessageCache::source_table(const KernelNet& kernel) {
  auto [it, fresh] = source_.try_emplace(kernel.l3_weight.impl().get());
  if (fresh) it->second = make_source_table(kernel);
  return it->second;
}

const Tensor& MessageCache::target_table(const KernelNet& kernel) {
  auto [it, fresh] = target_.try_emplace(kernel.l3_weight.impl().get());
  if (fresh) it->second = make_target_table(kernel);
  return it->second;
}

const Tensor& MessageCache::bias_matrix(const KernelNet& kernel) {
  auto [it, fresh] = bias_.try_emplace(kernel.l3_bias.impl().get());
  if (fresh) it->second = make_bias_matrix(kernel);
  return it->second;
}

Tensor kernel_hidden(const KernelNet& kn, const Tensor& attributes) {
  const Tensor h1 = diff::affine(attributes, kn.l1_weight, kn.l1_bias, /*apply_relu=*/true);
  return diff::affine(h1, kn.l2_weight, kn.l2_bias, /*apply_relu=*/true);
}

Tensor message_pass(const Tensor& prev_target_state, const Tensor& source_state,
                    const graph::EdgeList& edges, const KernelNet& kernel,
                    const AffineLocal& local, bool skip, MessageCache* cache) {
  const std::size_t w = kernel.width();
  if (prev_target_state.cols() != w || source_state.cols() != w) {
    throw diff::ShapeError("message_pass: state widths " +
                           std::to_string(prev_target_state.cols()) + "/" +
                           std::to_string(source_state.cols()) + " do not match kernel width " +
                           std::to_string(w));
  }
  if (local.weight.rows() != w || local.weight.cols() != w || local.bias.numel() != w) {
    throw diff::ShapeError("message_pass: local affine map is not " + std::to_string(w) + "x" +
                           std::to_string(w));
  }
  MessageCache local_cache;
  MessageCache& c = cache ? *cache : local_cache;

  const std::size_t n_src = source_state.rows(), n_tgt = prev_target_state.rows();
  const Tensor& h = c.hidden(kernel, edges);

  // Mean over neighbours of κ(e)·v = H·W3 contracted with v, plus the kernel bias B·v.
  // The contraction is ordered through whichever node set is smaller.
  Tensor aggregated;
  if (n_tgt < n_src) {
    const Tensor s = diff::edge_outer_mean(h, source_state, edges.src, edges.tgt, n_tgt);
    aggregated = diff::matmul(s, c.target_table(kernel));
  } else {
    const Tensor p = diff::matmul(source_state, c.source_table(kernel));
    aggregated = diff::segment_mean(diff::edge_contract(h, p, edges.src), edges.tgt, n_tgt);
  }
  const Tensor neighbour_mean =
      diff::sparse_matmul(c.mean_operator(edges, n_src, n_tgt), source_state);
  Tensor pre = diff::add(aggregated, diff::matmul(neighbour_mean, c.bias_matrix(kernel)));
  if (skip) pre = diff::add(pre, diff::matmul(prev_target_state, local.weight));
  return diff::relu(diff::add_bias(pre, local.bias));
}

Tensor lift(const ParameterStore& params, const Tensor& features) {
  return linear(features, params.get("lift.weight"), params.get("lift.bias"));
}

Tensor project(const ParameterStore& params, const Tensor& state) {
  return linear(state, params.get("proj.weight"), params.get("proj.bias"));
}

Tensor feature_tensor(const graph::MultiScaleGraph& g, std::size_t level) {
  const std::size_t n = g.levels.at(level).n_nodes();
  return Tensor({n, g.f_raw + g.dim()}, g.node_features(level));
}

Tensor mgno_forward(const ModelConfig& cfg, const ParameterStore& params,
                    const graph::MultiScaleGraph& g) {
  validate(cfg);
  if (cfg.kind != ModelKind::mgno) throw std::invalid_argument("mgno_forward: not an MGNO config");
  if (g.n_scales() != cfg.scales) {
    throw std::invalid_argument("mgno_forward: graph has " + std::to_string(g.n_scales()) +
                                " scales, config expects " + std::to_string(cfg.scales));
  }
  std::vector<Tensor> state;
  for (std::size_t l = 0; l < g.n_scales(); ++l) state.push_back(lift(params, feature_tensor(g, l)));

  const auto schedule = generate_schedule(cfg.cycle, cfg.scales);
  MessageCache cache;
  for (std::size_t t = 0; t < cfg.depth; ++t) {
    const std::size_t iteration_slot = cfg.iteration_sharing ? 0 : t;
    for (const auto& a : schedule.actions) {
      const std::size_t visit_slot = cfg.intra_cycle_sharing ? 0 : a.visit;
      const auto prefix = block_prefix(to_string(a.role), a.scale, visit_slot, iteration_slot);
      const KernelNet kernel = bind_kernel(params, prefix);
      const AffineLocal local = bind_local(params, prefix);
      const std::size_t l = a.scale - 1;
      std::size_t src = l, tgt = l;
      const graph::EdgeList* edges = &g.levels[l].intra;
      if (a.role == ActionRole::down) {
        tgt = l + 1;
        edges = &g.down[l];
      } else if (a.role == ActionRole::up) {
        src = l + 1;
        edges = &g.up[l];
      }
      state[tgt] = message_pass(state[tgt], state[src], *edges, kernel, local,
                                cfg.skip_connections, &cache);
    }
  }
  return project(params, state[0]);
}

Tensor gno_forward(const ModelConfig& cfg, const ParameterStore& params,
                   const graph::MultiScaleGraph& g) {
  validate(cfg);
  require_single_scale(g, "gno_forward");
  Tensor h = lift(params, feature_tensor(g, 0));
  const KernelNet kernel = bind_kernel(params, "gno");
  const AffineLocal local = bind_local(params, "gno");
  MessageCache cache;
  for (std::size_t t = 0; t < cfg.depth; ++t) {
    h = message_pass(h, h, g.levels[0].intra, kernel, local, /*skip=*/true, &cache);
  }
  return project(params, h);
}

Tensor mlp_forward(const ModelConfig& cfg, const ParameterStore& params,
                   const graph::MultiScaleGraph& g) {
  validate(cfg);
  require_single_scale(g, "mlp_forward");
  Tensor h = feature_tensor(g, 0);
  for (std::size_t l = 0; l < cfg.mlp_depth; ++l) {
    const std::string p = "mlp.l" + std::to_string(l + 1);
    h = linear(h, params.get(p + ".weight"), params.get(p + ".bias"));
    if (l + 1 < cfg.mlp_depth) h = diff::relu(h);
  }
  return h;
}

diff::CsrMatrix gcn_adjacency(const graph::EdgeList& intra, std::size_t n_nodes) {
  std::vector<std::vector<Index>> neighbours(n_nodes);
  for (std::size_t e = 0; e < intra.size(); ++e) {
    if (intra.src[e] != intra.tgt[e]) neighbours[intra.tgt[e]].push_back(intra.src[e]);
  }
  std::vector<double> degree(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto& nb = neighbours[i];
    nb.push_back(static_cast<Index>(i));
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    degree[i] = static_cast<double>(nb.size());
  }
  diff::CsrMatrix a;
  a.rows = a.cols = n_nodes;
  a.row_ptr.push_back(0);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (auto j : neighbours[i]) {
      a.col.push_back(j);
      a.value.push_back(1.0 / std::sqrt(degree[i] * degree[j]));
    }
    a.row_ptr.push_back(a.col.size());
  }
  return a;
}

Tensor gcn_forward(const ModelConfig& cfg, const ParameterStore& params,
                   const graph::MultiScaleGraph& g) {
  validate(cfg);
  require_single_scale(g, "gcn_forward");
  const auto adjacency = gcn_adjacency(g.levels[0].intra, g.levels[0].n_nodes());
  Tensor h = lift(params, feature_tensor(g, 0));
  for (std::size_t l = 0; l < cfg.gcn_depth; ++l) {
    const auto& w = params.get("gcn.l" + std::to_string(l + 1) + ".weight");
    h = diff::relu(diff::matmul(diff::sparse_matmul(adjacency, h), w));
  }
  return project(params, h);
}

Tensor forward(const ModelConfig& cfg, const ParameterStore& params,
               const graph::MultiScaleGraph& g) {
  switch (cfg.kind) {
    case ModelKind::mlp: return mlp_forward(cfg, params, g);
    case ModelKind::gcn: return gcn_forward(cfg, params, g);
    case ModelKind::gno: return gno_forward(cfg, params, g);
    case ModelKind::mgno: return mgno_forward(cfg, params, g);
  }
  throw std::invalid_argument("forward: unknown model kind");
}

}  // namespace mgno::ops
