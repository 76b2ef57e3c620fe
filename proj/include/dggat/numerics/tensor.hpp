#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dggat::numerics {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class Tape;

/// Dense row-major tensor of doubles with an optional gradient buffer.
///
/// A Tensor is a shared handle: copies alias the same storage. Use clone() for
/// a deep, detached copy. Values produced by ops are immutable; only leaf
/// tensors (parameters) should be modified in place, and only between
/// forward/backward passes.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Column vector [n x 1] or row-major matrix built from nested rows.
  static Tensor matrix(const std::vector<std::vector<double>>& rows,
                       bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  /// Rows/cols of a rank-2 tensor. A rank-1 tensor is treated as a column.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient buffer; empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return impl_->grad; }
  /// Gradient buffer, allocated (zero-filled) on first access.
  std::span<double> mutable_grad();
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    const Tape* tape = nullptr;
    std::size_t node = 0;
  };

  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<Impl> impl_;

  friend class Tape;
};

/// Ordered record of differentiable operations.
///
/// Ops record onto the tape installed for the current thread by a TapeScope.
/// With no active tape, ops evaluate without recording (inference mode).
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  Tape() = default;
  ~Tape() { clear(); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Appends a node producing `output`; `fn` propagates output gradients to inputs.
  void record(Tensor& output, BackwardFn fn);

  /// Reverse sweep from a scalar `loss` recorded on this tape. Gradients are
  /// added to existing buffers; callers zero them between steps.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

  static Tape* active();

 private:
  struct Node {
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;

  friend class TapeScope;
};

/// Installs a tape as the active one for this thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording on this thread for the scope's lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

/// Convenience: backward on the currently active tape.
void backward(const Tensor& loss);

}  // namespace dggat::numerics
