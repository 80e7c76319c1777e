#include "depthguard/losses.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "depthguard/network.hpp"
#include "depthguard/ops.hpp"

namespace depthguard {

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::L1: return "l1";
    case LossKind::L2: return "l2";
    case LossKind::REL: return "rel";
    case LossKind::LOG10: return "log10";
    case LossKind::LDIF: return "ldif";
  }
  return "l1";
}

LossKind parse_loss_kind(std::string_view text) {
  for (auto k : {LossKind::L1, LossKind::L2, LossKind::REL, LossKind::LOG10, LossKind::LDIF})
    if (to_string(k) == text) return k;
  fail(ErrorCode::invalid_argument, "unknown loss '" + std::string(text) + "' (expected l1|l2|rel|log10|ldif)");
}

namespace {

void require_same_shape(const Tensor& y, const Tensor& ybar, std::string_view what) {
  if (y.shape() != ybar.shape())
    fail(ErrorCode::shape_mismatch, std::string(what) + ": estimate " + to_string(y.shape()) +
                                        " vs ground truth " + to_string(ybar.shape()));
}

Tensor floor_depth(const Tensor& d) { return clamp(d, kDepthFloor, std::numeric_limits<double>::max()); }

}  // namespace

Tensor f_log(const Tensor& e) {
  dispatch(e.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto v = e.data<T>();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] < T(0)) fail(ErrorCode::domain, "f_log: negative error " + std::to_string(static_cast<double>(v[i])) +
                                                   " at flat index " + std::to_string(i));
  });
  return ln(add_scalar(e, 0.5));
}

Tensor l_depth(const Tensor& y, const Tensor& ybar) {
  require_same_shape(y, ybar, "l_depth");
  return mean(f_log(abs(sub(ybar, y))));
}

Tensor l_grad(const Tensor& y, const Tensor& ybar) {
  require_same_shape(y, ybar, "l_grad");
  const Tensor e = abs(sub(ybar, y));
  return mean(add(f_log(abs(forward_diff(e, Axis::u))), f_log(abs(forward_diff(e, Axis::v)))));
}

Tensor normal_cosine(const Tensor& y, const Tensor& ybar) {
  require_same_shape(y, ybar, "normal_cosine");
  if (y.ndim() < 2 || y.dim(y.ndim() - 1) < 2 || y.dim(y.ndim() - 2) < 2)
    fail(ErrorCode::shape_mismatch, "normal_cosine: need H,W >= 2, got " + to_string(y.shape()));
  const Tensor gu_est = forward_diff(y, Axis::u), gv_est = forward_diff(y, Axis::v);
  const Tensor gu_gt = forward_diff(ybar, Axis::u), gv_gt = forward_diff(ybar, Axis::v);
  const Tensor dot = add_scalar(add(mul(gu_est, gu_gt), mul(gv_est, gv_gt)), 1.0);
  const Tensor norm_est = sqrt(add_scalar(add(square(gu_est), square(gv_est)), 1.0));
  const Tensor norm_gt = sqrt(add_scalar(add(square(gu_gt), square(gv_gt)), 1.0));
  return div(dot, mul(norm_est, norm_gt));
}

Tensor l_normal(const Tensor& y, const Tensor& ybar) {
  return mean(add_scalar(neg(normal_cosine(y, ybar)), 1.0));
}

LossBreakdown l_dif(const Tensor& y, const Tensor& ybar) {
  LossBreakdown b;
  b.l_depth = l_depth(y, ybar);
  b.l_grad = l_grad(y, ybar);
  b.l_normal = l_normal(y, ybar);
  b.total = add(add(b.l_depth, b.l_grad), b.l_normal);
  return b;
}

Tensor sparsity(const Tensor& mask) {
  dispatch(mask.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto v = mask.data<T>();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] >= T(0) && v[i] <= T(1)))
        fail(ErrorCode::domain, "sparsity: mask value " + std::to_string(static_cast<double>(v[i])) +
                                    " outside [0,1] at flat index " + std::to_string(i));
  });
  return mean(mask);
}

Tensor attack_objective(LossKind kind, const Tensor& y, const Tensor& ybar) {
  require_same_shape(y, ybar, "attack_objective");
  switch (kind) {
    case LossKind::L1: return mean(abs(sub(ybar, y)));
    case LossKind::L2: return mean(square(sub(ybar, y)));
    case LossKind::REL: {
      const Tensor gt = floor_depth(ybar);
      return mean(div(abs(sub(gt, floor_depth(y))), gt));
    }
    case LossKind::LOG10:
      return scalar_mul(mean(abs(sub(ln(floor_depth(ybar)), ln(floor_depth(y))))), 1.0 / std::numbers::ln10);
    case LossKind::LDIF: return l_dif(y, ybar).total;
  }
  fail(ErrorCode::invalid_argument, "unknown loss kind");
}

}  // namespace depthguard
