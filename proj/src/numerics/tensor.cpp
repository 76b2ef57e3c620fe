#include "dggat/numerics/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "dggat/errors.hpp"

namespace dggat::numerics {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : impl_(std::make_shared<Impl>()) {
  impl_->shape = {0};
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  if (product(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.front().size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in Tensor::matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  return impl_->shape.empty() ? 1 : impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (impl_->shape.size() <= 1) return 1;
  std::size_t c = 1;
  for (std::size_t k = 1; k < impl_->shape.size(); ++k) c *= impl_->shape[k];
  return c;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractViolation("item() on tensor of shape " + shape_string(shape()));
  }
  return impl_->data[0];
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor out(impl_->shape, impl_->data, impl_->requires_grad);
  out.impl_->grad = impl_->grad;
  return out;
}

Tensor Tensor::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

void Tape::record(Tensor& output, BackwardFn fn) {
  output.impl_->tape = this;
  output.impl_->node = nodes_.size();
  output.impl_->requires_grad = true;
  nodes_.push_back(Node{output, std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractViolation("backward() needs a scalar loss, got shape " +
                            shape_string(loss.shape()));
  }
  if (loss.impl_->tape != this || loss.impl_->node >= nodes_.size() ||
      !nodes_[loss.impl_->node].output.same_storage(loss)) {
    throw ContractViolation("backward() loss is not recorded on this tape");
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (std::size_t k = loss.impl_->node + 1; k-- > 0;) {
    Node& node = nodes_[k];
    if (!node.output.has_grad()) continue;
    node.backward(node.output.grad());
  }
}

void Tape::clear() {
  for (auto& node : nodes_) node.output.impl_->tape = nullptr;
  nodes_.clear();
}

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }

NoGradScope::~NoGradScope() { g_active_tape = previous_; }

void backward(const Tensor& loss) {
  Tape* tape = Tape::active();
  if (tape == nullptr) throw ContractViolation("backward() without an active tape");
  tape->backward(loss);
}

}  // namespace dggat::numerics
