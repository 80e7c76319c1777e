#include "depthguard/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "depthguard/ops.hpp"

namespace depthguard {

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::string_view to_string(Dtype dtype) noexcept {
  return dtype == Dtype::f32 ? "f32" : "f64";
}

namespace {

std::shared_ptr<detail::Storage> allocate(Dtype dtype, std::size_t n, double value = 0.0) {
  auto storage = std::make_shared<detail::Storage>();
  if (dtype == Dtype::f32)
    storage->buffer = std::vector<float>(n, static_cast<float>(value));
  else
    storage->buffer = std::vector<double>(n, value);
  return storage;
}

void validate_shape(const Shape& shape) {
  for (auto extent : shape)
    if (extent == 0) fail(ErrorCode::invalid_argument, "tensor extents must be positive, got " + to_string(shape));
}

}  // namespace

Tensor make_tensor(Shape shape, Dtype dtype, std::shared_ptr<detail::Storage> storage) {
  auto impl = std::make_shared<detail::TensorImpl>();
  const std::size_t n = numel_of(shape);
  const std::size_t have = std::visit([](const auto& v) { return v.size(); }, storage->buffer);
  const bool dtype_ok = (dtype == Dtype::f32) == std::holds_alternative<std::vector<float>>(storage->buffer);
  if (!dtype_ok) fail(ErrorCode::invalid_argument, "storage dtype does not match tensor dtype");
  if (have != n)
    fail(ErrorCode::shape_mismatch,
         "buffer length " + std::to_string(have) + " does not match shape " + to_string(shape));
  impl->shape = std::move(shape);
  impl->dtype = dtype;
  impl->storage = std::move(storage);
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(Shape shape, Dtype dtype) { return full(std::move(shape), 0.0, dtype); }

Tensor Tensor::full(Shape shape, double value, Dtype dtype) {
  validate_shape(shape);
  const auto n = numel_of(shape);
  return make_tensor(std::move(shape), dtype, allocate(dtype, n, value));
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, Dtype dtype) {
  validate_shape(shape);
  if (values.size() != numel_of(shape))
    fail(ErrorCode::shape_mismatch, std::to_string(values.size()) + " values for shape " + to_string(shape));
  auto storage = allocate(dtype, values.size());
  std::visit(
      [&](auto& buf) {
        for (std::size_t i = 0; i < values.size(); ++i)
          buf[i] = static_cast<typename std::decay_t<decltype(buf)>::value_type>(values[i]);
      },
      storage->buffer);
  return make_tensor(std::move(shape), dtype, std::move(storage));
}

Tensor Tensor::from_values(Shape shape, std::initializer_list<double> values, Dtype dtype) {
  return from_values(std::move(shape), std::span<const double>(values.begin(), values.size()), dtype);
}

Tensor Tensor::scalar(double value, Dtype dtype) { return full({1}, value, dtype); }

detail::TensorImpl& Tensor::impl() const {
  if (!impl_) fail(ErrorCode::invalid_argument, "use of undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) fail(ErrorCode::invalid_argument, "axis out of range for shape " + to_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return numel_of(shape()); }

Dtype Tensor::dtype() const { return impl().dtype; }

template <typename T>
std::span<const T> Tensor::data() const {
  auto* v = std::get_if<std::vector<T>>(&impl().storage->buffer);
  if (!v) fail(ErrorCode::invalid_argument, "tensor dtype is not " + std::string(to_string(impl().dtype == Dtype::f32 ? Dtype::f64 : Dtype::f32)));
  return {v->data(), v->size()};
}

template <typename T>
std::span<T> Tensor::mutable_data() {
  auto* v = std::get_if<std::vector<T>>(&impl().storage->buffer);
  if (!v) fail(ErrorCode::invalid_argument, "tensor dtype mismatch in mutable_data");
  return {v->data(), v->size()};
}

template std::span<const float> Tensor::data<float>() const;
template std::span<const double> Tensor::data<double>() const;
template std::span<float> Tensor::mutable_data<float>();
template std::span<double> Tensor::mutable_data<double>();

double Tensor::item() const {
  if (numel() != 1) fail(ErrorCode::shape_mismatch, "item() on tensor of shape " + to_string(shape()));
  return at(0);
}

double Tensor::at(std::size_t i) const {
  if (i >= numel()) fail(ErrorCode::invalid_argument, "flat index out of range");
  return std::visit([i](const auto& v) { return static_cast<double>(v[i]); }, impl().storage->buffer);
}

std::vector<double> Tensor::values() const {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
                    impl().storage->buffer);
}

bool Tensor::requires_grad() const { return impl().requires_grad || impl().grad_fn != nullptr; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (impl().grad_fn) fail(ErrorCode::autograd, "requires_grad can only be set on leaf tensors");
  impl().requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return impl().grad_fn == nullptr; }

const std::shared_ptr<TapeNode>& Tensor::grad_fn() const { return impl().grad_fn; }

bool Tensor::has_grad() const { return impl().grad != nullptr; }

Tensor Tensor::grad() const {
  if (!impl().grad) return {};
  return make_tensor(impl().shape, impl().dtype, impl().grad);
}

void Tensor::zero_grad() { impl().grad.reset(); }

Tensor Tensor::detach() const { return make_tensor(impl().shape, impl().dtype, impl().storage); }

Tensor Tensor::clone() const {
  auto storage = std::make_shared<detail::Storage>(*impl().storage);
  return make_tensor(impl().shape, impl().dtype, std::move(storage));
}

Tensor Tensor::to(Dtype target) const {
  if (target == dtype()) return clone();
  const auto v = values();
  return from_values(shape(), v, target);
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape() != other.shape() || dtype() != other.dtype()) return false;
  return std::visit(
      [&](const auto& a) {
        using V = std::decay_t<decltype(a)>;
        const auto& b = std::get<V>(other.impl().storage->buffer);
        return std::memcmp(a.data(), b.data(), a.size() * sizeof(typename V::value_type)) == 0;
      },
      impl().storage->buffer);
}

Tensor record(Tensor result, std::string op, std::vector<Tensor> inputs,
              std::function<std::vector<Tensor>(const Tensor&)> backward_fn) {
  bool tracked = false;
  for (const auto& in : inputs) tracked = tracked || (in.defined() && in.requires_grad());
  if (!tracked) return result;
  auto node = std::make_shared<TapeNode>();
  node->op = std::move(op);
  node->inputs = std::move(inputs);
  node->backward = std::move(backward_fn);
  result.impl().grad_fn = std::move(node);
  return result;
}

namespace {

void accumulate_into(std::shared_ptr<detail::Storage>& slot, const Tensor& g) {
  if (!slot) {
    slot = std::make_shared<detail::Storage>(*g.impl().storage);
    return;
  }
  std::visit(
      [&](auto& dst) {
        using V = std::decay_t<decltype(dst)>;
        const auto& src = std::get<V>(g.impl().storage->buffer);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      },
      slot->buffer);
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined()) fail(ErrorCode::autograd, "backward on undefined tensor");
  if (loss.numel() != 1)
    fail(ErrorCode::autograd, "backward requires a scalar loss, got shape " + to_string(loss.shape()));
  if (!loss.requires_grad())
    fail(ErrorCode::autograd, "backward on a tensor that is detached from any tape");

  // Iterative post-order DFS over graph nodes; reversed order is topological.
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
  if (loss.grad_fn()) {
    stack.emplace_back(&loss.impl(), 0);
    visited.insert(&loss.impl());
  }
  while (!stack.empty()) {
    auto& [node_impl, next] = stack.back();
    const auto& inputs = node_impl->grad_fn->inputs;
    if (next < inputs.size()) {
      auto* child = &inputs[next++].impl();
      if (child->grad_fn && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node_impl);
      stack.pop_back();
    }
  }

  std::unordered_map<detail::TensorImpl*, Tensor> pending;
  const Tensor seed = Tensor::full(loss.shape(), 1.0, loss.dtype());
  if (!loss.grad_fn()) {
    accumulate_into(loss.impl().grad, seed);
    return;
  }
  pending.emplace(&loss.impl(), seed);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* impl = *it;
    auto found = pending.find(impl);
    if (found == pending.end()) continue;
    const Tensor grad_out = std::move(found->second);
    pending.erase(found);
    const auto& node = *impl->grad_fn;
    auto grads = node.backward(grad_out);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      if (i >= grads.size() || !grads[i].defined()) continue;
      const Tensor& input = node.inputs[i];
      if (!input.requires_grad()) continue;
      if (grads[i].shape() != input.shape())
        fail(ErrorCode::autograd, "backward of '" + node.op + "' produced gradient of shape " +
                                      to_string(grads[i].shape()) + " for input " + to_string(input.shape()));
      if (input.is_leaf()) {
        accumulate_into(input.impl().grad, grads[i]);
      } else {
        auto slot = pending.find(&input.impl());
        if (slot == pending.end())
          pending.emplace(&input.impl(), grads[i]);
        else
          slot->second = add(slot->second.detach(), grads[i]).detach();
      }
    }
  }
}

void check_finite(const Tensor& t, std::string_view op) {
  dispatch(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto d = t.data<T>();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d[i]))
        fail(ErrorCode::non_finite,
             std::string(op) + " produced a non-finite value at flat index " + std::to_string(i));
    }
  });
}

}  // namespace depthguard
