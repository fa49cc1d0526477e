/// @file ops.hpp
/// @brief Differentiable operations over 2-D float64 tensors.
///
/// Every op validates shapes up front and throws ShapeError with a report of
/// the offending extents. Index arguments are validated against the tensor
/// they address.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mgno/diffcore/tensor.hpp"

namespace mgno::diff {

using Index = std::uint32_t;

/// c = a·b for a (m×k), b (k×n).
Tensor matmul(const Tensor& a, const Tensor& b);
/// x·w + bias, optionally followed by relu, as one recorded op.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias, bool apply_relu = false);
/// Elementwise sum of equally shaped tensors.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// x (m×n) plus a bias row b (n) added to every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
/// [a | b] for equal row counts.
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Row i of the result is row idx[i] of t.
Tensor gather_rows(const Tensor& t, std::span<const Index> idx);
/// Row s is the mean of rows whose segment id is s; empty segments give zeros.
Tensor segment_mean(const Tensor& values, std::span<const Index> segment_of,
                    std::size_t n_segments);
/// Reindexing view: out.flat[i] = t.flat[map[i]] with the given output shape.
Tensor gather_elements(const Tensor& t, std::span<const Index> map, Shape out_shape);
Tensor sum(const Tensor& a);
Tensor sum_squares(const Tensor& a);
/// Square root of a positive scalar.
Tensor sqrt_scalar(const Tensor& a);

/// Constant sparse matrix in CSR form.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<Index> col;
  Buffer value;
};
/// y = A·x for constant sparse A.
Tensor sparse_matmul(const CsrMatrix& a, const Tensor& x);

/// Per-edge bilinear contraction against source-node tables.
///   out[e, a] = Σ_j h[e, j] · p[src[e], j·w + a]
/// with h (E×k), p (n×(k·w)), result (E×w).
Tensor edge_contract(const Tensor& h, const Tensor& p, std::span<const Index> src);

/// Per-target mean of edge outer products.
///   out[t, j·w + b] = mean_{e: tgt[e]=t} h[e, j] · v[src[e], b]
/// with h (E×k), v (n_src×w), result (n_tgt×(k·w)); empty targets give zeros.
Tensor edge_outer_mean(const Tensor& h, const Tensor& v, std::span<const Index> src,
                       std::span<const Index> tgt, std::size_t n_tgt);

}  // namespace mgno::diff
