#include "mgno/meshgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mgno::graph {

namespace {

void attach_attributes(EdgeList& edges, const ScaleLevel& src, const ScaleLevel& tgt,
                       std::size_t dim, std::size_t f_raw) {
  const std::size_t width = 2 * dim + 2 * f_raw;
  edges.attr_width = width;
  edges.attr.assign(edges.size() * width, 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double* row = edges.attr.data() + e * width;
    const std::size_t s = edges.src[e], t = edges.tgt[e];
    for (std::size_t d = 0; d < dim; ++d) {
      row[d] = src.positions[s * dim + d];
      row[dim + d] = tgt.positions[t * dim + d];
    }
    for (std::size_t f = 0; f < f_raw; ++f) {
      row[2 * dim + f] = src.values[s * f_raw + f];
      row[2 * dim + f_raw + f] = tgt.values[t * f_raw + f];
    }
  }
}

EdgeList transpose(const EdgeList& edges) {
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Reversed edges sorted by (new target, new source) = (old src, old tgt).
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (edges.src[a] != edges.src[b]) return edges.src[a] < edges.src[b];
    return edges.tgt[a] < edges.tgt[b];
  });
  EdgeList out;
  out.src.reserve(edges.size());
  out.tgt.reserve(edges.size());
  for (auto i : order) {
    out.src.push_back(edges.tgt[i]);
    out.tgt.push_back(edges.src[i]);
  }
  return out;
}

void check_edges(const EdgeList& edges, const ScaleLevel& src, const ScaleLevel& tgt,
                 const Domain& domain, double radius, std::size_t width, const std::string& what) {
  if (edges.tgt.size() != edges.src.size()) {
    throw GraphError(what + ": endpoint lists differ in length");
  }
  if (edges.attr_width != width || edges.attr.size() != edges.size() * width) {
    throw GraphError(what + ": edge attribute width must be " + std::to_string(width));
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges.src[e] >= src.n_nodes() || edges.tgt[e] >= tgt.n_nodes()) {
      throw GraphError(what + ": edge endpoint out of range");
    }
    const double d = distance(domain, src.positions.data() + edges.src[e] * domain.dim,
                              tgt.positions.data() + edges.tgt[e] * domain.dim);
    if (d > radius) {
      throw GraphError(what + ": radius predicate violated (distance " + std::to_string(d) +
                       " > " + std::to_string(radius) + ")");
    }
  }
}

}  // namespace

std::vector<double> MultiScaleGraph::node_features(std::size_t level) const {
  const auto& lv = levels.at(level);
  const std::size_t dim = domain.dim, width = f_raw + dim;
  std::vector<double> out(lv.n_nodes() * width);
  for (std::size_t i = 0; i < lv.n_nodes(); ++i) {
    for (std::size_t f = 0; f < f_raw; ++f) out[i * width + f] = lv.values[i * f_raw + f];
    for (std::size_t d = 0; d < dim; ++d) out[i * width + f_raw + d] = lv.positions[i * dim + d];
  }
  return out;
}

double distance(const Domain& domain, const double* a, const double* b) {
  double sq = 0.0;
  for (std::size_t d = 0; d < domain.dim; ++d) {
    double delta = std::abs(a[d] - b[d]);
    if (domain.metric == Metric::periodic) delta = std::min(delta, domain.period() - delta);
    sq += delta * delta;
  }
  return std::sqrt(sq);
}

MultiScaleGraph sample_nodes(const Domain& domain, const std::vector<ScaleSpec>& specs,
                             const GridData& grid, diff::SeededRng& rng) {
  if (specs.empty()) throw GraphError("sample_nodes: at least one scale is required");
  if (grid.dim != domain.dim) throw GraphError("sample_nodes: grid and domain dimension differ");
  const std::size_t n_points = grid.n_points();
  if (grid.values.size() != n_points * grid.f_raw) {
    throw GraphError("sample_nodes: grid values do not match grid points");
  }
  MultiScaleGraph g;
  g.domain = domain;
  g.f_raw = grid.f_raw;
  g.specs = specs;
  std::vector<std::size_t> pool(n_points);
  for (const auto& spec : specs) {
    if (spec.n_nodes == 0) throw GraphError("sample_nodes: n_nodes must be >= 1");
    if (spec.n_nodes > n_points) {
      throw GraphError("sample_nodes: " + std::to_string(spec.n_nodes) + " nodes requested from " +
                       std::to_string(n_points) + " grid points");
    }
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n_nodes entries are a uniform subset.
    for (std::size_t i = 0; i < spec.n_nodes; ++i) {
      const std::size_t j = i + rng.uniform_index(n_points - i);
      std::swap(pool[i], pool[j]);
    }
    ScaleLevel level;
    level.grid_index.assign(pool.begin(), pool.begin() + spec.n_nodes);
    level.positions.resize(spec.n_nodes * domain.dim);
    level.values.resize(spec.n_nodes * grid.f_raw);
    for (std::size_t i = 0; i < spec.n_nodes; ++i) {
      const std::size_t p = level.grid_index[i];
      for (std::size_t d = 0; d < domain.dim; ++d)
        level.positions[i * domain.dim + d] = grid.coords[p * domain.dim + d];
      for (std::size_t f = 0; f < grid.f_raw; ++f)
        level.values[i * grid.f_raw + f] = grid.values[p * grid.f_raw + f];
    }
    g.levels.push_back(std::move(level));
  }
  return g;
}

EdgeList build_radius_edges(const Domain& domain, const std::vector<double>& src_pos,
                            const std::vector<double>& tgt_pos, double radius) {
  if (!(radius > 0.0)) throw GraphError("build_radius_edges: radius must be positive");
  const std::size_t dim = domain.dim;
  const std::size_t n_src = src_pos.size() / dim, n_tgt = tgt_pos.size() / dim;
  EdgeList edges;
  for (std::size_t t = 0; t < n_tgt; ++t) {
    for (std::size_t s = 0; s < n_src; ++s) {
      if (distance(domain, src_pos.data() + s * dim, tgt_pos.data() + t * dim) <= radius) {
        edges.src.push_back(static_cast<Index>(s));
        edges.tgt.push_back(static_cast<Index>(t));
      }
    }
  }
  return edges;
}

MultiScaleGraph assemble(MultiScaleGraph g) {
  const std::size_t n_scales = g.levels.size();
  if (g.specs.size() != n_scales) throw GraphError("assemble: one ScaleSpec per level required");
  const std::size_t dim = g.domain.dim;
  for (std::size_t l = 0; l < n_scales; ++l) {
    auto& lv = g.levels[l];
    lv.intra = build_radius_edges(g.domain, lv.positions, lv.positions, g.specs[l].radius_intra);
    attach_attributes(lv.intra, lv, lv, dim, g.f_raw);
  }
  g.down.clear();
  g.up.clear();
  for (std::size_t l = 0; l + 1 < n_scales; ++l) {
    EdgeList down = build_radius_edges(g.domain, g.levels[l].positions,
                                       g.levels[l + 1].positions, g.specs[l].radius_cross);
    EdgeList up = transpose(down);
    attach_attributes(down, g.levels[l], g.levels[l + 1], dim, g.f_raw);
    attach_attributes(up, g.levels[l + 1], g.levels[l], dim, g.f_raw);
    g.down.push_back(std::move(down));
    g.up.push_back(std::move(up));
  }
  validate(g);
  return g;
}

void validate(const MultiScaleGraph& g) {
  const std::size_t n_scales = g.levels.size();
  if (n_scales == 0) throw GraphError("invariant 'at least one scale' violated");
  if (g.specs.size() != n_scales) throw GraphError("invariant 'one spec per scale' violated");
  if (g.down.size() + 1 != n_scales || g.up.size() + 1 != n_scales) {
    throw GraphError("invariant 'cross edges between every adjacent scale pair' violated");
  }
  const std::size_t width = g.edge_attr_width();
  for (std::size_t l = 0; l < n_scales; ++l) {
    const auto& spec = g.specs[l];
    if (spec.n_nodes == 0 || !(spec.radius_intra > 0.0)) {
      throw GraphError("invariant 'n_nodes >= 1 and radii > 0' violated at scale " +
                       std::to_string(l + 1));
    }
    if (g.levels[l].n_nodes() != spec.n_nodes) {
      throw GraphError("invariant 'node count matches ScaleSpec' violated at scale " +
                       std::to_string(l + 1));
    }
    if (l + 1 < n_scales) {
      if (!(spec.radius_cross > 0.0)) {
        throw GraphError("invariant 'radii > 0' violated for cross radius at scale " +
                         std::to_string(l + 1));
      }
      if (g.specs[l + 1].n_nodes >= spec.n_nodes) {
        throw GraphError("invariant 'monotone coarsening' violated between scales " +
                         std::to_string(l + 1) + " and " + std::to_string(l + 2));
      }
    }
    check_edges(g.levels[l].intra, g.levels[l], g.levels[l], g.domain, spec.radius_intra, width,
                "invariant 'intra radius' at scale " + std::to_string(l + 1));
  }
  for (std::size_t l = 0; l + 1 < n_scales; ++l) {
    const double r = g.specs[l].radius_cross;
    check_edges(g.down[l], g.levels[l], g.levels[l + 1], g.domain, r,
                width, "invariant 'cross radius' on down edges " + std::to_string(l + 1));
    check_edges(g.up[l], g.levels[l + 1], g.levels[l], g.domain, r, width,
                "invariant 'cross radius' on up edges " + std::to_string(l + 1));
    const EdgeList expected = transpose(g.down[l]);
    if (expected.src != g.up[l].src || expected.tgt != g.up[l].tgt) {
      throw GraphError("invariant 'up edges are the transpose of down edges' violated at scale " +
                       std::to_string(l + 1));
    }
  }
}

MultiScaleGraph build_graph(const Domain& domain, const std::vector<ScaleSpec>& specs,
                            const GridData& grid, diff::SeededRng& rng) {
  return assemble(sample_nodes(domain, specs, grid, rng));
}

}  // namespace mgno::graph
