#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "depthguard/defense.hpp"
#include "depthguard/losses.hpp"
#include "depthguard/network.hpp"
#include "depthguard/ops.hpp"
#include "depthguard/rng.hpp"
#include "depthguard/tensor.hpp"

namespace depthguard::testing {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Uniform values in [lo, hi), double precision.
inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(numel_of(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(shape, v, Dtype::f64);
}

/// Magnitudes in [lo, hi) with random sign; keeps samples away from kinks at 0.
inline Tensor signed_away_from_zero(const Shape& shape, Rng& rng, double lo = 0.1, double hi = 1.0) {
  std::vector<double> v(numel_of(shape));
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(lo, hi);
  return Tensor::from_values(shape, v, Dtype::f64);
}

struct GradReport {
  double error = 0.0;
  /// Coordinates skipped because the stencil straddles a kink.
  std::size_t kinks = 0;
};

/// Normwise relative error ||g_analytic - g_fd|| / ||g_fd|| of the gradient
/// of scalar fn(inputs) w.r.t. inputs[which], central differences with step h.
/// With `piecewise`, a coordinate whose stencil straddles a ReLU switch is
/// skipped when the analytic value matches one of the one-sided differences;
/// any other mismatch still counts.
inline GradReport gradient_report(const ScalarFn& fn, const std::vector<Tensor>& inputs, std::size_t which,
                                  double h = 1e-4, bool piecewise = false) {
  std::vector<Tensor> leaves;
  for (const Tensor& t : inputs) leaves.push_back(t.clone());
  leaves[which].set_requires_grad(true);
  backward(fn(leaves));
  const std::vector<double> analytic = leaves[which].grad().values();

  std::vector<Tensor> probe;
  for (const Tensor& t : inputs) probe.push_back(t.clone());
  auto data = probe[which].mutable_data<double>();
  const double center = piecewise ? fn(probe).item() : 0.0;
  double scale = 0.0;
  for (double g : analytic) scale = std::max(scale, std::abs(g));
  GradReport report;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + h;
    const double up = fn(probe).item();
    data[i] = saved - h;
    const double down = fn(probe).item();
    data[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    if (piecewise) {
      const double right = (up - center) / h, left = (center - down) / h;
      // Smooth: the analytic value sits midway between the one-sided
      // differences. Kink: it matches one side to second order.
      const double gap = std::abs(right - left);
      if (gap > 1e-9 * scale &&
          std::min(std::abs(analytic[i] - right), std::abs(analytic[i] - left)) < 0.1 * gap) {
        ++report.kinks;
        continue;
      }
    }
    num += (analytic[i] - fd) * (analytic[i] - fd);
    den += fd * fd;
  }
  report.error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return report;
}

inline double gradient_error(const ScalarFn& fn, const std::vector<Tensor>& inputs, std::size_t which,
                             double h = 1e-4) {
  return gradient_report(fn, inputs, which, h).error;
}

/// Random fixed weights r so that sum(r * y) exercises every output entry.
inline Tensor weighted_sum(const Tensor& y, const Tensor& r) { return sum(mul(y, r)); }

struct GradCase {
  std::string name;
  /// Builds the inputs for one seed and reports the worst error over them.
  std::function<double(std::uint64_t seed)> run;
};

inline double worst_input_error(const ScalarFn& fn, const std::vector<Tensor>& inputs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) worst = std::max(worst, gradient_error(fn, inputs, i));
  return worst;
}

/// Every differentiable op, each loss, the mask product, and both toy
/// networks (input gradient) at reduced resolution.
inline std::vector<GradCase> gradient_cases() {
  const Shape s{2, 3, 4};
  std::vector<GradCase> cases;
  const auto unary = [&](std::string name, std::function<Tensor(const Tensor&)> op, double lo, double hi,
                         bool signed_input = false) {
    cases.push_back({name, [=](std::uint64_t seed) {
                       Rng rng(seed);
                       Tensor x = signed_input ? signed_away_from_zero(s, rng, lo, hi) : random_tensor(s, rng, lo, hi);
                       Tensor r = random_tensor(s, rng);
                       return worst_input_error([=](const auto& in) { return weighted_sum(op(in[0]), r); }, {x});
                     }});
  };
  const auto binary = [&](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> op, double lo,
                          double hi) {
    cases.push_back({name, [=](std::uint64_t seed) {
                       Rng rng(seed);
                       Tensor a = random_tensor(s, rng, lo, hi), b = random_tensor(s, rng, lo, hi);
                       Tensor r = random_tensor(s, rng);
                       return worst_input_error([=](const auto& in) { return weighted_sum(op(in[0], in[1]), r); },
                                                {a, b});
                     }});
  };
  binary("add", [](const Tensor& a, const Tensor& b) { return add(a, b); }, -1, 1);
  binary("sub", [](const Tensor& a, const Tensor& b) { return sub(a, b); }, -1, 1);
  binary("mul", [](const Tensor& a, const Tensor& b) { return mul(a, b); }, -1, 1);
  binary("div", [](const Tensor& a, const Tensor& b) { return div(a, b); }, 0.5, 2);
  cases.push_back({"mul_broadcast", [=](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_tensor(s, rng), b = random_tensor({1}, rng), r = random_tensor(s, rng);
                     return worst_input_error([=](const auto& in) { return weighted_sum(mul(in[0], in[1]), r); },
                                              {a, b});
                   }});
  unary("add_scalar", [](const Tensor& x) { return add_scalar(x, 0.7); }, -1, 1);
  unary("scalar_mul", [](const Tensor& x) { return scalar_mul(x, -1.3); }, -1, 1);
  unary("neg", [](const Tensor& x) { return neg(x); }, -1, 1);
  unary("abs", [](const Tensor& x) { return abs(x); }, 0.1, 1, true);
  unary("ln", [](const Tensor& x) { return ln(x); }, 0.2, 2);
  unary("exp", [](const Tensor& x) { return exp(x); }, -1, 1);
  unary("sqrt", [](const Tensor& x) { return sqrt(x); }, 0.2, 2);
  unary("square", [](const Tensor& x) { return square(x); }, -1, 1);
  unary("clamp", [](const Tensor& x) { return clamp(x, -0.05, 0.05); }, 0.1, 1, true);
  unary("clamp_interior", [](const Tensor& x) { return clamp(x, -2.0, 2.0); }, -1, 1);
  unary("relu", [](const Tensor& x) { return relu(x); }, 0.1, 1, true);
  unary("sigmoid", [](const Tensor& x) { return sigmoid(x); }, -3, 3);
  unary("softplus", [](const Tensor& x) { return softplus(x); }, -3, 3);
  unary("sum", [](const Tensor& x) { return sum(x); }, -1, 1);
  unary("mean", [](const Tensor& x) { return mean(x); }, -1, 1);
  unary("forward_diff_u", [](const Tensor& x) { return forward_diff(x, Axis::u); }, -1, 1);
  unary("forward_diff_v", [](const Tensor& x) { return forward_diff(x, Axis::v); }, -1, 1);
  cases.push_back({"bilinear_upsample2x", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = random_tensor({2, 3, 4}, rng), r = random_tensor({2, 6, 8}, rng);
                     return worst_input_error(
                         [=](const auto& in) { return weighted_sum(bilinear_upsample2x(in[0]), r); }, {x});
                   }});
  for (std::size_t stride : {1, 2}) {
    cases.push_back({"conv2d_stride" + std::to_string(stride), [stride](std::uint64_t seed) {
                       Rng rng(seed);
                       Tensor x = random_tensor({2, 5, 6}, rng);
                       Tensor w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
                       const std::size_t ho = (5 + 2 - 3) / stride + 1, wo = (6 + 2 - 3) / stride + 1;
                       Tensor r = random_tensor({3, ho, wo}, rng);
                       return worst_input_error(
                           [=](const auto& in) { return weighted_sum(conv2d(in[0], in[1], in[2], stride, 1), r); },
                           {x, w, b});
                     }});
  }
  cases.push_back({"apply_mask", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = random_tensor({3, 4, 5}, rng, 0, 1), m = random_tensor({1, 4, 5}, rng, 0, 1);
                     Tensor r = random_tensor({3, 4, 5}, rng);
                     return worst_input_error([=](const auto& in) { return weighted_sum(apply_mask(in[0], in[1]), r); },
                                              {x, m});
                   }});
  // Depth maps whose pairwise differences stay clear of |.| kinks.
  const auto depth_pair = [](Rng& rng, const Shape& shape) {
    Tensor ybar = random_tensor(shape, rng, 1, 5);
    Tensor offset = signed_away_from_zero(shape, rng, 0.2, 0.8);
    return std::pair{add(ybar, offset).detach(), ybar};
  };
  const auto loss_case = [&](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> loss) {
    cases.push_back({name, [=](std::uint64_t seed) {
                       Rng rng(seed);
                       auto [y, ybar] = depth_pair(rng, {1, 4, 5});
                       return worst_input_error([=](const auto& in) { return loss(in[0], in[1]); }, {y, ybar});
                     }});
  };
  loss_case("l_depth", [](const Tensor& y, const Tensor& ybar) { return l_depth(y, ybar); });
  loss_case("l_normal", [](const Tensor& y, const Tensor& ybar) { return l_normal(y, ybar); });
  loss_case("l_dif", [](const Tensor& y, const Tensor& ybar) { return l_dif(y, ybar).total; });
  for (LossKind k : {LossKind::L1, LossKind::L2, LossKind::REL, LossKind::LOG10})
    loss_case("objective_" + std::string(to_string(k)),
              [k](const Tensor& y, const Tensor& ybar) { return attack_objective(k, y, ybar); });
  // l_grad differentiates |du e|; a linear error ramp keeps every difference
  // away from zero.
  cases.push_back({"l_grad", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const std::size_t h = 4, w = 5;
                     std::vector<double> ybar(h * w), y(h * w);
                     const double a = rng.uniform(0.3, 0.6), b = rng.uniform(0.3, 0.6);
                     for (std::size_t i = 0; i < h; ++i)
                       for (std::size_t j = 0; j < w; ++j) {
                         ybar[i * w + j] = rng.uniform(1, 5);
                         y[i * w + j] = ybar[i * w + j] + 0.5 + a * double(j) + b * double(i) + rng.uniform(0, 0.05);
                       }
                     Tensor ty = Tensor::from_values({1, h, w}, y, Dtype::f64);
                     Tensor tb = Tensor::from_values({1, h, w}, ybar, Dtype::f64);
                     return worst_input_error([](const auto& in) { return l_grad(in[0], in[1]); }, {ty, tb});
                   }});
  cases.push_back({"sparsity", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor m = random_tensor({1, 4, 5}, rng, 0.05, 0.95);
                     return worst_input_error([](const auto& in) { return sparsity(in[0]); }, {m});
                   }});
  for (NetRole role : {NetRole::depth, NetRole::saliency}) {
    cases.push_back({std::string("network_") + std::string(to_string(role)), [role](std::uint64_t seed) {
                       NetworkSpec spec = role == NetRole::depth ? depth_spec(16, 16, {4, 8, 8})
                                                                 : saliency_spec(16, 16, {4, 8, 8});
                       spec.dtype = Dtype::f64;
                       const ParameterStore p = build_network(spec, seed).frozen();
                       Rng rng(seed ^ 0x5eedull);
                       Tensor x = random_tensor(spec.input_shape(), rng, 0, 1);
                       Tensor r = random_tensor(spec.output_shape(), rng);
                       return gradient_report(
                                  [=](const auto& in) {
                                    return weighted_sum(role == NetRole::depth ? forward_depth(p, in[0])
                                                                               : forward_saliency(p, in[0]),
                                                        r);
                                  },
                                  {x}, 0, 1e-4, true)
                           .error;
                     }});
  }
  return cases;
}

}  // namespace depthguard::testing
