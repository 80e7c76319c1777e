#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "depthguard/error.hpp"

namespace depthguard {

/// Scalar precision tag. Codes match the DGT1 on-disk dtype byte.
enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);
std::string_view to_string(Dtype dtype) noexcept;

/// Calls `fn(T{})` with T = float or double according to `dtype`.
template <typename Fn>
decltype(auto) dispatch(Dtype dtype, Fn&& fn) {
  if (dtype == Dtype::f32) return fn(float{});
  return fn(double{});
}

class Tensor;

/// One recorded operation in the autograd graph. `backward` maps the
/// gradient of the node's output to one gradient per input; an undefined
/// tensor means "no contribution" for that input.
struct TapeNode {
  std::string op;
  std::vector<Tensor> inputs;
  std::function<std::vector<Tensor>(const Tensor& grad_output)> backward;
};

namespace detail {

struct Storage {
  std::variant<std::vector<float>, std::vector<double>> buffer;
};

struct TensorImpl {
  Shape shape;
  Dtype dtype = Dtype::f32;
  std::shared_ptr<Storage> storage;
  bool requires_grad = false;
  std::shared_ptr<Storage> grad;
  std::shared_ptr<TapeNode> grad_fn;
};

}  // namespace detail

/// Dense row-major n-dimensional array with optional gradient tracking.
///
/// A Tensor is a handle: copies share the same buffer and graph node.
/// Operations never mutate their inputs; `detach()` shares data but drops
/// graph membership, `clone()` deep-copies.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Dtype dtype = Dtype::f32);
  static Tensor full(Shape shape, double value, Dtype dtype = Dtype::f32);
  static Tensor from_values(Shape shape, std::span<const double> values,
                            Dtype dtype = Dtype::f32);
  static Tensor from_values(Shape shape, std::initializer_list<double> values,
                            Dtype dtype = Dtype::f32);
  static Tensor scalar(double value, Dtype dtype = Dtype::f32);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  Dtype dtype() const;

  template <typename T>
  std::span<const T> data() const;
  template <typename T>
  std::span<T> mutable_data();

  double item() const;
  double at(std::size_t flat_index) const;
  std::vector<double> values() const;

  /// True for leaves flagged as trainable and for every tensor produced
  /// from one on the active graph.
  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;
  const std::shared_ptr<TapeNode>& grad_fn() const;

  bool has_grad() const;
  /// Accumulated gradient as a detached tensor sharing the grad buffer.
  Tensor grad() const;
  void zero_grad();

  Tensor detach() const;
  Tensor clone() const;
  Tensor to(Dtype dtype) const;

  bool same_as(const Tensor& other) const noexcept { return impl_ == other.impl_; }
  bool bitwise_equal(const Tensor& other) const;

  detail::TensorImpl& impl() const;

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<detail::TensorImpl> impl_;

  friend Tensor make_tensor(Shape, Dtype, std::shared_ptr<detail::Storage>);
  friend void backward(const Tensor& loss);
};

/// Wraps an existing buffer. The buffer variant must match `dtype`.
Tensor make_tensor(Shape shape, Dtype dtype, std::shared_ptr<detail::Storage> storage);

/// Attaches a tape node to `result` when any input participates in the
/// graph. Returns `result` for chaining.
Tensor record(Tensor result, std::string op, std::vector<Tensor> inputs,
              std::function<std::vector<Tensor>(const Tensor&)> backward_fn);

/// Reverse-mode sweep from a scalar loss. Populates `grad` of every leaf
/// that requires grad; repeated calls accumulate.
void backward(const Tensor& loss);

/// Throws ErrorCode::non_finite naming the op and first offending index.
void check_finite(const Tensor& t, std::string_view op);

}  // namespace depthguard
