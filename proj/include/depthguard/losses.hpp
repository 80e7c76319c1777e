#pragma once

#include <optional>
#include <string_view>

#include "depthguard/tensor.hpp"

namespace depthguard {

/// Attack objectives compared in the loss ablation.
enum class LossKind { L1, L2, REL, LOG10, LDIF };

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view text);

/// Components of the depth difference loss. `total` is the tape node
/// l_depth + l_grad + l_normal; the components may be negative because
/// F(0) = ln 0.5.
struct LossBreakdown {
  Tensor l_depth;
  Tensor l_grad;
  Tensor l_normal;
  Tensor total;
  std::optional<Tensor> sparsity;
  double lambda = 0.0;
};

/// F(e) = ln(e + 0.5) for e >= 0; negative entries raise ErrorCode::domain.
Tensor f_log(const Tensor& e);

// All depth losses take (estimate y, ground truth ybar) of identical shape.
Tensor l_depth(const Tensor& y, const Tensor& ybar);
/// mean of F(|du e|) + F(|dv e|) over pixels, e = |ybar - y|, forward
/// differences with a zero last column/row.
Tensor l_grad(const Tensor& y, const Tensor& ybar);
/// Per-pixel cosine between the normals (-du d, -dv d, 1) of both maps.
Tensor normal_cosine(const Tensor& y, const Tensor& ybar);
/// mean(1 - cos theta); lies in [0, 2].
Tensor l_normal(const Tensor& y, const Tensor& ybar);
LossBreakdown l_dif(const Tensor& y, const Tensor& ybar);

/// (1/n)||m||_1 for a mask with entries in [0,1].
Tensor sparsity(const Tensor& mask);

/// Error between estimate and target to be maximised by an attack. Ratio
/// and log objectives clamp both maps below at the 0.01 m depth floor.
Tensor attack_objective(LossKind kind, const Tensor& y, const Tensor& ybar);

}  // namespace depthguard
