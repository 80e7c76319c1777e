#pragma once

#include <cstddef>

#include "depthguard/tensor.hpp"

// Differentiable tensor operations. Binary ops accept identical shapes, or
// one operand with a single element that is broadcast over the other.
// Every forward result is checked for NaN/Inf.

namespace depthguard {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double s);
Tensor scalar_mul(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor abs(const Tensor& a);
/// Natural log; throws ErrorCode::domain naming the first index with x <= 0.
Tensor ln(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
/// Gradient flows only where lo < x < hi.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// ln(1 + exp(x)), evaluated without overflow.
Tensor softplus(const Tensor& a);

/// Scalar (shape [1]) reductions; accumulate in double, sequential order.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Cross-correlation over a single [C_in,H,W] image with square odd kernels.
/// Output extent is floor((H + 2*padding - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              std::size_t stride, std::size_t padding);

/// [C,H,W] -> [C,2H,2W], half-pixel centers (align_corners = false).
Tensor bilinear_upsample2x(const Tensor& input);

enum class Axis { u, v };

/// Forward difference along the last (u) or second-to-last (v) axis; the
/// final column/row, which has no forward neighbour, is 0.
Tensor forward_diff(const Tensor& a, Axis axis);

/// Elementwise -1/0/+1. Never recorded on the tape.
Tensor sign(const Tensor& a);

}  // namespace depthguard
