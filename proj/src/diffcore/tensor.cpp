#include "mgno/diffcore/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <sstream>

namespace mgno::diff {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, Buffer data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), Buffer(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Buffer data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  const auto& s = impl_->shape;
  if (s.size() == 1) return 1;
  if (s.size() != 2) throw ShapeError("rows(): tensor is not 2-D " + shape_str(s));
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = impl_->shape;
  if (s.size() == 1) return s[0];
  if (s.size() != 2) throw ShapeError("cols(): tensor is not 2-D " + shape_str(s));
  return s[1];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item(): tensor has " + std::to_string(numel()) + " values");
  return impl_->data[0];
}

std::span<const double> Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

Tensor Tensor::detach_copy() const {
  return Tensor(impl_->shape, impl_->data, false);
}

// ---------------------------------------------------------------------------

void Tape::record(std::string_view op, std::vector<std::shared_ptr<TensorImpl>> inputs,
                  std::shared_ptr<TensorImpl> output, BackwardFn backward) {
  output->is_leaf = false;
  records_.push_back(Record{op, std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  for (auto& rec : records_) rec.output->grad.clear();
  loss.impl()->grad.assign(1, 1.0);
  last_visits_ = 0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // not an ancestor of the loss
    it->backward(*it->output);
    ++last_visits_;
  }
}

namespace {
thread_local Tape* g_active_tape = nullptr;

std::atomic<bool> g_faults_enabled{false};
std::mutex g_fault_mutex;
std::set<std::string, std::less<>> g_faults;
}  // namespace

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
  if (!g_active_tape) throw std::logic_error("backward: no active tape");
  g_active_tape->backward(loss);
}

namespace testing {

void inject_backward_fault(std::string op) {
  std::lock_guard lock(g_fault_mutex);
  g_faults.insert(std::move(op));
  g_faults_enabled = true;
}

void clear_backward_faults() {
  std::lock_guard lock(g_fault_mutex);
  g_faults.clear();
  g_faults_enabled = false;
}

bool backward_fault(std::string_view op) {
  if (!g_faults_enabled.load(std::memory_order_relaxed)) return false;
  std::lock_guard lock(g_fault_mutex);
  return g_faults.find(op) != g_faults.end();
}

}  // namespace testing

}  // namespace mgno::diff
