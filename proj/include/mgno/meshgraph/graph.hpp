/// @file graph.hpp
/// @brief Multilevel Euclidean graphs built by uniform node sampling and radius search.
///
/// Scale 0 in code is the finest scale. Each scale samples its own node set
/// from the grid (scales are not nested). Intra-scale edges connect nodes
/// within `radius_intra`; cross-scale edges between scale l and l+1 connect
/// nodes within `radius_cross` of scale l. Up edges are the transpose of down
/// edges. Every edge carries [x_src, x_tgt, v0(x_src), v0(x_tgt)].

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgno/diffcore/rng.hpp"

namespace mgno::graph {

using Index = std::uint32_t;

enum class Metric { euclidean, periodic };

/// Axis-aligned box [lower, upper]^dim; periodic metrics wrap with the box length.
struct Domain {
  std::size_t dim = 2;
  Metric metric = Metric::euclidean;
  double lower = 0.0;
  double upper = 1.0;

  double period() const { return upper - lower; }
};

/// Grid points and the raw input fields sampled on them.
struct GridData {
  std::size_t dim = 0;
  std::size_t f_raw = 0;
  std::vector<double> coords;  // n_points x dim
  std::vector<double> values;  // n_points x f_raw

  std::size_t n_points() const { return dim ? coords.size() / dim : 0; }
};

struct ScaleSpec {
  std::size_t n_nodes = 0;
  double radius_intra = 0.0;
  /// Radius for edges between this scale and the next coarser one.
  double radius_cross = 0.0;
};

struct EdgeList {
  std::vector<Index> src;
  std::vector<Index> tgt;
  std::vector<double> attr;  // size() x attr_width
  std::size_t attr_width = 0;

  std::size_t size() const { return src.size(); }
};

struct ScaleLevel {
  std::vector<std::size_t> grid_index;
  std::vector<double> positions;  // n x dim
  std::vector<double> values;     // n x f_raw
  EdgeList intra;

  std::size_t n_nodes() const { return grid_index.size(); }
};

struct MultiScaleGraph {
  Domain domain;
  std::size_t f_raw = 0;
  std::vector<ScaleSpec> specs;
  std::vector<ScaleLevel> levels;
  std::vector<EdgeList> down;  // down[l]: source at l, target at l+1
  std::vector<EdgeList> up;    // up[l]: source at l+1, target at l

  std::size_t n_scales() const { return levels.size(); }
  std::size_t dim() const { return domain.dim; }
  std::size_t edge_attr_width() const { return 2 * domain.dim + 2 * f_raw; }
  /// Row-major n_l x (f_raw + dim): input values followed by positions.
  std::vector<double> node_features(std::size_t level) const;
};

/// Raised when a graph invariant is violated; the message names the invariant.
class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Distance under the domain metric.
double distance(const Domain& domain, const double* a, const double* b);

/// Sample node sets for every scale uniformly without replacement.
MultiScaleGraph sample_nodes(const Domain& domain, const std::vector<ScaleSpec>& specs,
                             const GridData& grid, diff::SeededRng& rng);

/// All (source, target) pairs within `radius` (inclusive), sorted by (target, source).
/// Attributes are left empty.
EdgeList build_radius_edges(const Domain& domain, const std::vector<double>& src_pos,
                            const std::vector<double>& tgt_pos, double radius);

/// Build intra/cross edges for a skeleton, attach attributes and validate.
MultiScaleGraph assemble(MultiScaleGraph skeleton);

/// Check every structural invariant; throws GraphError naming the first violation.
void validate(const MultiScaleGraph& g);

/// sample_nodes followed by assemble.
MultiScaleGraph build_graph(const Domain& domain, const std::vector<ScaleSpec>& specs,
                            const GridData& grid, diff::SeededRng& rng);

}  // namespace mgno::graph
