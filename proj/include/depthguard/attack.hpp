#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "depthguard/losses.hpp"
#include "depthguard/network.hpp"
#include "depthguard/tensor.hpp"

namespace depthguard {

/// Differentiable map from an image to a depth estimate.
using DepthModel = std::function<Tensor(const Tensor&)>;

enum class AttackTarget { plain_n, composite_c };

/// Step-size convention. `eps_split` uses alpha = eps / iters; `gray_level`
/// steps by one 8-bit level, alpha = 1/255.
enum class AlphaMode { eps_split, gray_level, explicit_value };

struct AttackConfig {
  double eps = 0.05;
  std::size_t iters = 10;
  AlphaMode alpha_mode = AlphaMode::eps_split;
  double alpha_value = 0.0;
  LossKind objective = LossKind::L1;
  AttackTarget target = AttackTarget::plain_n;
  /// Replace the ground truth with the clean prediction (label-free).
  bool self_target = false;
  std::uint64_t seed = 0;

  double alpha() const;
  void validate() const;
  /// e.g. "ifgsm-l1" or "fgsm-rel-self"; used in CSV rows and provenance.
  std::string descriptor() const;
};

struct AttackResult {
  Tensor x_star;
  double linf = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::size_t iterations_run = 0;
};

/// Elementwise clamp of x_t into [max(0, x - eps), min(1, x + eps)].
Tensor clip_eps(const Tensor& x_t, const Tensor& x, double eps);

/// Iterative gradient-sign ascent on attack_objective(model(x*), ybar).
AttackResult ifgsm(const DepthModel& model, const Tensor& x, const Tensor& ybar, const AttackConfig& cfg);
/// Single step of size eps.
AttackResult fgsm(const DepthModel& model, const Tensor& x, const Tensor& ybar, double eps,
                  LossKind objective = LossKind::L1);

/// x -> N(x * G(x)) with gradients through both networks and the mask.
DepthModel composite_model(const ParameterStore& depth_net, const ParameterStore& saliency_net);
DepthModel plain_model(const ParameterStore& depth_net);

/// IFGSM against the composite C(x) = N(x * G(x)).
AttackResult attack_composite(const ParameterStore& depth_net, const ParameterStore& saliency_net,
                              const Tensor& x, const Tensor& ybar, const AttackConfig& cfg);

}  // namespace depthguard

namespace depthguard {

/// key=value lines describing `cfg`, stored in adversarial DGD1 files.
std::string provenance_text(const AttackConfig& cfg);
/// Inverse of provenance_text; unknown keys are ignored, missing keys keep
/// their defaults. Throws ErrorCode::format on malformed values.
AttackConfig parse_provenance(std::string_view text);

}  // namespace depthguard
