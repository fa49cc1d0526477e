/// @file models.hpp
/// @brief Kernel-integral message passing and the MLP / GCN / GNO / MGNO forward passes.

#pragma once

#include <map>
#include <utility>

#include "mgno/diffcore/ops.hpp"
#include "mgno/meshgraph/graph.hpp"
#include "mgno/operators/config.hpp"
#include "mgno/operators/params.hpp"
#include "mgno/operators/schedule.hpp"

namespace mgno::ops {

/// MLP edge-attribute -> (width x width) kernel: e -> k -> k -> width², relu between.
/// The last layer's column a·width + b holds kernel entry (a, b).
struct KernelNet {
  diff::Tensor l1_weight, l1_bias, l2_weight, l2_bias, l3_weight, l3_bias;

  std::size_t hidden() const { return l1_weight.cols(); }
  std::size_t width() const;
};

/// Local affine map W, b.
struct AffineLocal {
  diff::Tensor weight, bias;
};

KernelNet bind_kernel(const ParameterStore& params, const std::string& prefix);
AffineLocal bind_local(const ParameterStore& params, const std::string& prefix);

/// Memoizes per-forward quantities that do not depend on node states: edge
/// attribute tensors, kernel hidden activations, and regrouped last-layer
/// weights. Reusing a cache across parameter updates is not allowed.
class MessageCache {
 public:
  const diff::Tensor& attributes(const graph::EdgeList& edges);
  const diff::Tensor& hidden(const KernelNet& kernel, const graph::EdgeList& edges);
  /// Row-stochastic (n_tgt x n_src) matrix averaging sources over each target's edges.
  const diff::CsrMatrix& mean_operator(const graph::EdgeList& edges, std::size_t n_src,
                                       std::size_t n_tgt);
  /// Last layer regrouped as (width x k·width) for source-side contraction.
  const diff::Tensor& source_table(const KernelNet& kernel);
  /// Last layer regrouped as (k·width x width) for target-side contraction.
  const diff::Tensor& target_table(const KernelNet& kernel);
  /// Kernel bias regrouped as (width x width) so that v·B applies the bias matrix.
  const diff::Tensor& bias_matrix(const KernelNet& kernel);

 private:
  std::map<const void*, diff::Tensor> attrs_;
  std::map<std::pair<const void*, const void*>, diff::Tensor> hidden_;
  std::map<const void*, diff::Tensor> source_, target_, bias_;
  std::map<const void*, diff::CsrMatrix> mean_;
};

/// Kernel hidden activations relu(l2(relu(l1(attr)))) for each edge (E x k).
diff::Tensor kernel_hidden(const KernelNet& kernel, const diff::Tensor& attributes);

/// One kernel-integral update on the target scale:
///   out = relu([skip ? prev·W + b : b] + mean_{e -> t} κ(attr_e) source[src_e])
diff::Tensor message_pass(const diff::Tensor& prev_target_state, const diff::Tensor& source_state,
                          const graph::EdgeList& edges, const KernelNet& kernel,
                          const AffineLocal& local, bool skip, MessageCache* cache = nullptr);

/// Pointwise lift P of scale features to model width.
diff::Tensor lift(const ParameterStore& params, const diff::Tensor& features);
/// Pointwise projection Q to one output per node.
diff::Tensor project(const ParameterStore& params, const diff::Tensor& state);

/// Node features of one scale as a constant tensor.
diff::Tensor feature_tensor(const graph::MultiScaleGraph& g, std::size_t level);

diff::Tensor mgno_forward(const ModelConfig& cfg, const ParameterStore& params,
                          const graph::MultiScaleGraph& g);
diff::Tensor gno_forward(const ModelConfig& cfg, const ParameterStore& params,
                         const graph::MultiScaleGraph& g);
diff::Tensor mlp_forward(const ModelConfig& cfg, const ParameterStore& params,
                         const graph::MultiScaleGraph& g);
diff::Tensor gcn_forward(const ModelConfig& cfg, const ParameterStore& params,
                         const graph::MultiScaleGraph& g);

/// Symmetric-normalized adjacency D^{-1/2}(A + I)D^{-1/2} from finest intra edges.
diff::CsrMatrix gcn_adjacency(const graph::EdgeList& intra, std::size_t n_nodes);

/// Dispatch on cfg.kind. Output is (n_1 x 1).
diff::Tensor forward(const ModelConfig& cfg, const ParameterStore& params,
                     const graph::MultiScaleGraph& g);

}  // namespace mgno::ops
