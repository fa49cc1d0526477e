#include "mgno/diffcore/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace mgno::diff {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using RowMatMap = Eigen::Map<RowMat>;
using ConstRowMatMap = Eigen::Map<const RowMat>;
using RowVecMap = Eigen::Map<RowVec>;
using ConstRowVecMap = Eigen::Map<const RowVec>;

ConstMap view(const TensorImpl& t, std::size_t r, std::size_t c) {
  return ConstMap(t.data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

bool needs_tape(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape()) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

/// Wraps freshly computed values into a tensor and records the op when needed.
Tensor emit(std::string_view op, Shape shape, Buffer data,
            std::initializer_list<const Tensor*> inputs, Tape::BackwardFn backward) {
  const bool track = needs_tape(inputs);
  Tensor out(std::move(shape), std::move(data), track);
  if (track) {
    std::vector<std::shared_ptr<TensorImpl>> in;
    in.reserve(inputs.size());
    for (const auto* t : inputs) in.push_back(t->impl());
    active_tape()->record(op, std::move(in), out.impl(), std::move(backward));
  }
  return out;
}

void require_2d(const Tensor& t, const char* op, const char* name) {
  if (t.dim() != 2) {
    throw ShapeError(std::string(op) + ": " + name + " must be 2-D, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void check_indices(std::span<const Index> idx, std::size_t bound, const char* op) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= bound) {
      throw ShapeError(std::string(op) + ": index " + std::to_string(idx[i]) + " at position " +
                       std::to_string(i) + " out of range [0, " + std::to_string(bound) + ")");
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul", "a");
  require_2d(b, "matmul", "b");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner extents differ, a is " + shape_str(a.shape()) + ", b is " +
                     shape_str(b.shape()));
  }
  Buffer out(m * n);
  MutMap(out.data(), m, n).noalias() = view(*a.impl(), m, k) * view(*b.impl(), k, n);
  auto ai = a.impl().get();
  auto bi = b.impl().get();
  return emit("matmul", {m, n}, std::move(out), {&a, &b}, [ai, bi, m, k, n](TensorImpl& c) {
    const ConstMap g(c.grad.data(), m, n);
    if (ai->requires_grad) {
      MutMap(ai->grad_buffer().data(), m, k).noalias() += g * view(*bi, k, n).transpose();
    }
    if (bi->requires_grad) {
      MutMap(bi->grad_buffer().data(), k, n).noalias() += view(*ai, m, k).transpose() * g;
    }
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias, bool apply_relu) {
  require_2d(x, "affine", "x");
  require_2d(w, "affine", "w");
  const std::size_t m = x.shape()[0], k = x.shape()[1], n = w.shape()[1];
  if (w.shape()[0] != k) {
    throw ShapeError("affine: inner extents differ, x is " + shape_str(x.shape()) + ", w is " +
                     shape_str(w.shape()));
  }
  if (bias.numel() != n) {
    throw ShapeError("affine: bias " + shape_str(bias.shape()) + " does not match " +
                     shape_str(w.shape()));
  }
  Buffer out(m * n);
  MutMap o(out.data(), m, n);
  o.noalias() = view(*x.impl(), m, k) * view(*w.impl(), k, n);
  o.rowwise() += ConstRowVecMap(bias.data().data(), n);
  if (apply_relu) o = o.cwiseMax(0.0);
  auto xi = x.impl().get();
  auto wi = w.impl().get();
  auto bi = bias.impl().get();
  return emit(apply_relu ? "affine_relu" : "affine", {m, n}, std::move(out), {&x, &w, &bias},
              [xi, wi, bi, m, k, n, apply_relu](TensorImpl& c) {
                RowMat masked;
                const double* gp = c.grad.data();
                if (apply_relu && !testing::backward_fault("relu")) {
                  masked = ConstMap(c.grad.data(), m, n);
                  const double* od = c.data.data();
                  for (std::size_t i = 0; i < m * n; ++i) {
                    if (!(od[i] > 0.0)) masked.data()[i] = 0.0;
                  }
                  gp = masked.data();
                }
                const ConstMap g(gp, m, n);
                if (xi->requires_grad) {
                  MutMap(xi->grad_buffer().data(), m, k).noalias() += g * view(*wi, k, n).transpose();
                }
                if (wi->requires_grad) {
                  MutMap(wi->grad_buffer().data(), k, n).noalias() += view(*xi, m, k).transpose() * g;
                }
                if (bi->requires_grad) {
                  RowVecMap(bi->grad_buffer().data(), n) += g.colwise().sum();
                }
              });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto ai = a.impl().get();
  auto bi = b.impl().get();
  return emit("add", a.shape(), std::move(out), {&a, &b}, [ai, bi](TensorImpl& c) {
    for (auto* in : {ai, bi}) {
      if (!in->requires_grad) continue;
      auto g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += c.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto ai = a.impl().get();
  auto bi = b.impl().get();
  return emit("sub", a.shape(), std::move(out), {&a, &b}, [ai, bi](TensorImpl& c) {
    if (ai->requires_grad) {
      auto g = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += c.grad[i];
    }
    if (bi->requires_grad) {
      auto g = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= c.grad[i];
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_bias", "x");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (bias.numel() != n) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match columns of " +
                     shape_str(x.shape()));
  }
  Buffer out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  auto xi = x.impl().get();
  auto bi = bias.impl().get();
  return emit("add_bias", x.shape(), std::move(out), {&x, &bias}, [xi, bi, m, n](TensorImpl& o) {
    if (xi->requires_grad) {
      auto g = xi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bi->requires_grad) {
      auto g = bi->grad_buffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += o.grad[r * n + c];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a.data()[i];
  auto ai = a.impl().get();
  return emit("scale", a.shape(), std::move(out), {&a}, [ai, s](TensorImpl& c) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * c.grad[i];
  });
}

Tensor relu(const Tensor& a) {
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  auto ai = a.impl().get();
  return emit("relu", a.shape(), std::move(out), {&a}, [ai](TensorImpl& c) {
    auto g = ai->grad_buffer();
    if (testing::backward_fault("relu")) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += c.grad[i];
      return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (ai->data[i] > 0.0) g[i] += c.grad[i];
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_cols", "a");
  require_2d(b, "concat_cols", "b");
  const std::size_t m = a.shape()[0], na = a.shape()[1], nb = b.shape()[1];
  if (b.shape()[0] != m) {
    throw ShapeError("concat_cols: row counts differ " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const std::size_t n = na + nb;
  Buffer out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < na; ++c) out[r * n + c] = a.data()[r * na + c];
    for (std::size_t c = 0; c < nb; ++c) out[r * n + na + c] = b.data()[r * nb + c];
  }
  auto ai = a.impl().get();
  auto bi = b.impl().get();
  return emit("concat_cols", {m, n}, std::move(out), {&a, &b},
              [ai, bi, m, na, nb, n](TensorImpl& o) {
                if (ai->requires_grad) {
                  auto g = ai->grad_buffer();
                  for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < na; ++c) g[r * na + c] += o.grad[r * n + c];
                }
                if (bi->requires_grad) {
                  auto g = bi->grad_buffer();
                  for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < nb; ++c) g[r * nb + c] += o.grad[r * n + na + c];
                }
              });
}

Tensor gather_rows(const Tensor& t, std::span<const Index> idx) {
  require_2d(t, "gather_rows", "t");
  const std::size_t rows = t.shape()[0], n = t.shape()[1];
  check_indices(idx, rows, "gather_rows");
  Buffer out(idx.size() * n);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t c = 0; c < n; ++c) out[i * n + c] = t.data()[idx[i] * n + c];
  auto ti = t.impl().get();
  std::vector<Index> keep(idx.begin(), idx.end());
  return emit("gather_rows", {idx.size(), n}, std::move(out), {&t},
              [ti, keep = std::move(keep), n](TensorImpl& o) {
                auto g = ti->grad_buffer();
                for (std::size_t i = 0; i < keep.size(); ++i)
                  for (std::size_t c = 0; c < n; ++c) g[keep[i] * n + c] += o.grad[i * n + c];
              });
}

Tensor segment_mean(const Tensor& values, std::span<const Index> segment_of,
                    std::size_t n_segments) {
  require_2d(values, "segment_mean", "values");
  const std::size_t e = values.shape()[0], d = values.shape()[1];
  if (segment_of.size() != e) {
    throw ShapeError("segment_mean: " + std::to_string(segment_of.size()) +
                     " segment ids for " + std::to_string(e) + " rows");
  }
  check_indices(segment_of, n_segments, "segment_mean");
  Buffer count(n_segments, 0.0);
  for (auto s : segment_of) count[s] += 1.0;
  Buffer out(n_segments * d, 0.0);
  for (std::size_t i = 0; i < e; ++i) {
    const auto s = segment_of[i];
    for (std::size_t c = 0; c < d; ++c) out[s * d + c] += values.data()[i * d + c];
  }
  for (std::size_t s = 0; s < n_segments; ++s) {
    if (count[s] == 0.0) continue;
    const double inv = 1.0 / count[s];
    for (std::size_t c = 0; c < d; ++c) out[s * d + c] *= inv;
  }
  auto vi = values.impl().get();
  std::vector<Index> seg(segment_of.begin(), segment_of.end());
  return emit("segment_mean", {n_segments, d}, std::move(out), {&values},
              [vi, seg = std::move(seg), count = std::move(count), d](TensorImpl& o) {
                auto g = vi->grad_buffer();
                for (std::size_t i = 0; i < seg.size(); ++i) {
                  const auto s = seg[i];
                  const double inv = 1.0 / count[s];
                  for (std::size_t c = 0; c < d; ++c) g[i * d + c] += inv * o.grad[s * d + c];
                }
              });
}

Tensor gather_elements(const Tensor& t, std::span<const Index> map, Shape out_shape) {
  if (shape_numel(out_shape) != map.size()) {
    throw ShapeError("gather_elements: map of " + std::to_string(map.size()) +
                     " entries for shape " + shape_str(out_shape));
  }
  check_indices(map, t.numel(), "gather_elements");
  Buffer out(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = t.data()[map[i]];
  auto ti = t.impl().get();
  std::vector<Index> keep(map.begin(), map.end());
  return emit("gather_elements", std::move(out_shape), std::move(out), {&t},
              [ti, keep = std::move(keep)](TensorImpl& o) {
                auto g = ti->grad_buffer();
                for (std::size_t i = 0; i < keep.size(); ++i) g[keep[i]] += o.grad[i];
              });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  auto ai = a.impl().get();
  return emit("sum", {1}, {s}, {&a}, [ai](TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (auto& v : g) v += o.grad[0];
  });
}

Tensor sum_squares(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  auto ai = a.impl().get();
  return emit("sum_squares", {1}, {s}, {&a}, [ai](TensorImpl& o) {
    auto g = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * ai->data[i] * o.grad[0];
  });
}

Tensor sqrt_scalar(const Tensor& a) {
  if (a.numel() != 1) throw ShapeError("sqrt_scalar: expected scalar, got " + shape_str(a.shape()));
  const double r = std::sqrt(a.data()[0]);
  auto ai = a.impl().get();
  return emit("sqrt", {1}, {r}, {&a}, [ai, r](TensorImpl& o) {
    ai->accumulate_grad(0, o.grad[0] * 0.5 / r);
  });
}

Tensor sparse_matmul(const CsrMatrix& a, const Tensor& x) {
  require_2d(x, "sparse_matmul", "x");
  if (x.shape()[0] != a.cols) {
    throw ShapeError("sparse_matmul: matrix has " + std::to_string(a.cols) + " columns, x is " +
                     shape_str(x.shape()));
  }
  if (a.row_ptr.size() != a.rows + 1) throw ShapeError("sparse_matmul: malformed row_ptr");
  check_indices(a.col, a.cols, "sparse_matmul");
  const std::size_t n = x.shape()[1];
  Buffer out(a.rows * n, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const double v = a.value[p];
      const double* xr = x.data().data() + a.col[p] * n;
      for (std::size_t c = 0; c < n; ++c) out[r * n + c] += v * xr[c];
    }
  }
  auto xi = x.impl().get();
  return emit("sparse_matmul", {a.rows, n}, std::move(out), {&x}, [xi, a, n](TensorImpl& o) {
    auto g = xi->grad_buffer();
    for (std::size_t r = 0; r < a.rows; ++r) {
      for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
        const double v = a.value[p];
        for (std::size_t c = 0; c < n; ++c) g[a.col[p] * n + c] += v * o.grad[r * n + c];
      }
    }
  });
}

Tensor edge_contract(const Tensor& h, const Tensor& p, std::span<const Index> src) {
  require_2d(h, "edge_contract", "h");
  require_2d(p, "edge_contract", "p");
  const std::size_t e = h.shape()[0], k = h.shape()[1];
  if (src.size() != e) throw ShapeError("edge_contract: src length differs from edge count");
  if (k == 0 || p.shape()[1] % k != 0) {
    throw ShapeError("edge_contract: table width " + std::to_string(p.shape()[1]) +
                     " is not a multiple of " + std::to_string(k));
  }
  check_indices(src, p.shape()[0], "edge_contract");
  const std::size_t w = p.shape()[1] / k;
  const std::size_t pw = k * w;
  Buffer out(e * w, 0.0);
  const double* hd = h.data().data();
  const double* pd = p.data().data();
  for (std::size_t i = 0; i < e; ++i) {
    double* o = out.data() + i * w;
    const double* prow = pd + src[i] * pw;
    for (std::size_t j = 0; j < k; ++j) {
      const double hj = hd[i * k + j];
      const double* pj = prow + j * w;
#pragma omp simd
      for (std::size_t a = 0; a < w; ++a) o[a] += hj * pj[a];
    }
  }
  auto hi = h.impl().get();
  auto pi = p.impl().get();
  std::vector<Index> keep(src.begin(), src.end());
  return emit("edge_contract", {e, w}, std::move(out), {&h, &p},
              [hi, pi, keep = std::move(keep), e, k, w, pw](TensorImpl& o) {
                const double* g = o.grad.data();
                double* gh = hi->requires_grad ? hi->grad_buffer().data() : nullptr;
                double* gp = pi->requires_grad ? pi->grad_buffer().data() : nullptr;
                const double* hd = hi->data.data();
                const double* pd = pi->data.data();
                for (std::size_t i = 0; i < e; ++i) {
                  const double* gi = g + i * w;
                  if (gh) {
                    const double* prow = pd + keep[i] * pw;
                    for (std::size_t j = 0; j < k; ++j) {
                      const double* pj = prow + j * w;
                      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                      for (std::size_t a = 0; a < w; ++a) acc += gi[a] * pj[a];
                      gh[i * k + j] += acc;
                    }
                  }
                  if (gp) {
                    double* prow = gp + keep[i] * pw;
                    for (std::size_t j = 0; j < k; ++j) {
                      const double hj = hd[i * k + j];
                      double* pj = prow + j * w;
#pragma omp simd
                      for (std::size_t a = 0; a < w; ++a) pj[a] += hj * gi[a];
                    }
                  }
                }
              });
}

Tensor edge_outer_mean(const Tensor& h, const Tensor& v, std::span<const Index> src,
                       std::span<const Index> tgt, std::size_t n_tgt) {
  require_2d(h, "edge_outer_mean", "h");
  require_2d(v, "edge_outer_mean", "v");
  const std::size_t e = h.shape()[0], k = h.shape()[1], w = v.shape()[1];
  if (src.size() != e || tgt.size() != e) {
    throw ShapeError("edge_outer_mean: endpoint lists do not match edge count");
  }
  check_indices(src, v.shape()[0], "edge_outer_mean");
  check_indices(tgt, n_tgt, "edge_outer_mean");
  const std::size_t kw = k * w;
  Buffer inv(n_tgt, 0.0);
  for (auto t : tgt) inv[t] += 1.0;
  for (auto& c : inv) c = c > 0.0 ? 1.0 / c : 0.0;
  Buffer out(n_tgt * kw, 0.0);
  for (std::size_t i = 0; i < e; ++i) {
    double* o = out.data() + tgt[i] * kw;
    const double* hrow = h.data().data() + i * k;
    const double* vs = v.data().data() + src[i] * w;
    for (std::size_t j = 0; j < k; ++j) {
      const double hj = hrow[j];
      double* oj = o + j * w;
      for (std::size_t b = 0; b < w; ++b) oj[b] += hj * vs[b];
    }
  }
  for (std::size_t t = 0; t < n_tgt; ++t) {
    if (inv[t] != 0.0) RowVecMap(out.data() + t * kw, kw) *= inv[t];
  }
  auto hi = h.impl().get();
  auto vi = v.impl().get();
  std::vector<Index> s(src.begin(), src.end());
  std::vector<Index> tg(tgt.begin(), tgt.end());
  return emit("edge_outer_mean", {n_tgt, kw}, std::move(out), {&h, &v},
              [hi, vi, s = std::move(s), tg = std::move(tg), inv = std::move(inv), e, k, w,
               kw](TensorImpl& o) {
                double* gh = hi->requires_grad ? hi->grad_buffer().data() : nullptr;
                double* gv = vi->requires_grad ? vi->grad_buffer().data() : nullptr;
                const double* hd = hi->data.data();
                const double* vd = vi->data.data();
                for (std::size_t i = 0; i < e; ++i) {
                  const double c = inv[tg[i]];
                  const double* go = o.grad.data() + tg[i] * kw;
                  const double* vs = vd + s[i] * w;
                  double* gvs = gv ? gv + s[i] * w : nullptr;
                  for (std::size_t j = 0; j < k; ++j) {
                    const double* goj = go + j * w;
                    if (gh) {
                      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                      for (std::size_t b = 0; b < w; ++b) acc += goj[b] * vs[b];
                      gh[i * k + j] += c * acc;
                    }
                    if (gvs) {
                      const double hj = c * hd[i * k + j];
#pragma omp simd
                      for (std::size_t b = 0; b < w; ++b) gvs[b] += hj * goj[b];
                    }
                  }
                }
              });
}

}  // namespace mgno::diff
