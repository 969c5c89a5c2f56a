#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepgroup/rng.hpp"

namespace deepgroup {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cache-line aligned so vectorized kernels split work the same way on every run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, alignment); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

namespace detail {

struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  Buffer& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major double tensor participating in a reverse-mode graph.
///
/// Tensor is a cheap handle; copies alias the same storage. Leaves created
/// with `requires_grad` accumulate gradients across backward passes until
/// `zero_grad()`. Intermediate nodes drop their graph links after backward.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  // Seeds d(self)/d(self) = 1; self must hold one element.
  void backward();

  detail::Node& node() const { return *node_; }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  static Tensor make_result(Shape shape, Buffer values, std::vector<Tensor> parents,
                            std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

enum class ReduceOp { Mean, Max, Min, Median };

// Row-index lists packed back to back; segment b is ids[offsets[b] .. offsets[b + 1]).
struct Segments {
  std::vector<int> ids;
  std::vector<std::size_t> offsets{0};

  void add(std::span<const int> rows) {
    ids.insert(ids.end(), rows.begin(), rows.end());
    offsets.push_back(ids.size());
  }
  void clear() {
    ids.clear();
    offsets.assign(1, 0);
  }
  std::size_t size() const { return offsets.size() - 1; }
  std::span<const int> operator[](std::size_t b) const { return {ids.data() + offsets[b], offsets[b + 1] - offsets[b]}; }
};

// out[b, :] = input[b, :] * weight^T + bias, input [B x p], weight [q x p], bias [q].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);

// Mean binary cross-entropy; predictions are clamped to [eps, 1 - eps].
inline constexpr double kBceEpsilon = 1e-7;
Tensor bce_loss(const Tensor& predictions, const Tensor& targets);

// Inverted dropout. Identity when !training or keep_prob == 1.
Tensor dropout(const Tensor& input, double keep_prob, bool training, Rng& rng);

// Columnwise reduction of rows [k x d] to [d]. Max/Min route the gradient to
// the first achieving row; Median takes the lower median for even k.
Tensor elementwise_reduce(const Tensor& rows, ReduceOp op);

// Batched elementwise_reduce over row subsets of `table` [n x d]:
// out[b, :] = reduce(table[segments[b], :]) with rows taken in the given order.
Tensor gather_reduce(const Tensor& table, const Segments& segments, ReduceOp op);

// out[b, :] = table[ids[b], :]
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

// Horizontal concatenation of 2-D tensors with equal row counts. 1-D inputs
// are treated as a single row.
Tensor concat_columns(std::span<const Tensor> parts);
Tensor concat_columns(std::initializer_list<Tensor> parts);

Tensor sum(const Tensor& input);

}  // namespace deepgroup
