/// @file tensor.hpp
/// @brief Dense float64 tensors and the reverse-mode tape that records them.
///
/// A Tensor is a shared handle onto row-major data. Operations executed while
/// a Tape is active (see TapeScope) are recorded in creation order, which is a
/// topological order of the computation graph; Tape::backward walks the
/// records once in reverse. Without an active tape, operations only compute
/// values, which is how evaluation passes avoid touching gradients.

#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mgno/diffcore/aligned.hpp"

namespace mgno::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Thrown for shape mismatches and out-of-range indices.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};


struct TensorImpl {
  Shape shape;
  Buffer data;
  Buffer grad;  // empty until first accumulation
  bool requires_grad = false;
  bool is_leaf = true;

  void accumulate_grad(std::size_t i, double g) {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    grad[i] += g;
  }
  std::span<double> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Buffer data, bool requires_grad = false);
  template <class Alloc>
    requires(!std::same_as<Alloc, AlignedAllocator<double>>)
  Tensor(Shape shape, const std::vector<double, Alloc>& data, bool requires_grad = false)
      : Tensor(std::move(shape), Buffer(data.begin(), data.end()), requires_grad) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Matrix from nested rows; convenient in tests.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  /// Rows/cols of a 2-D tensor (a 1-D tensor is treated as a single row).
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return impl_->data; }
  /// In-place access for optimizers and initializers only.
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient buffer; zeros if nothing was accumulated yet.
  std::span<const double> grad() const;
  void zero_grad() { impl_->grad.clear(); }

  /// Deep copy without gradient history.
  Tensor detach_copy() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Ordered log of differentiable operations.
class Tape {
 public:
  using BackwardFn = std::function<void(TensorImpl& out)>;

  struct Record {
    std::string_view op;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::shared_ptr<TensorImpl> output;
    BackwardFn backward;
  };

  void record(std::string_view op, std::vector<std::shared_ptr<TensorImpl>> inputs,
              std::shared_ptr<TensorImpl> output, BackwardFn backward);

  /// Populate grads of every requires_grad ancestor of a scalar loss.
  /// Intermediate grads are reset on each call; leaf grads accumulate.
  void backward(const Tensor& loss);

  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  /// Number of backward-rule invocations during the most recent backward().
  std::size_t last_backward_visits() const { return last_visits_; }
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
  std::size_t last_visits_ = 0;
};

/// Makes a tape the active one for the current thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Convenience: backward on the active tape.
void backward(const Tensor& loss);

namespace testing {
/// Corrupt the backward rule of the named op (used by mutation self-tests).
void inject_backward_fault(std::string op);
void clear_backward_faults();
bool backward_fault(std::string_view op);
}  // namespace testing

}  // namespace mgno::diff
