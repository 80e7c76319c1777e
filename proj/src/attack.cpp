#include "depthguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "depthguard/defense.hpp"
#include "depthguard/ops.hpp"

namespace depthguard {

double AttackConfig::alpha() const {
  switch (alpha_mode) {
    case AlphaMode::eps_split: return eps / static_cast<double>(iters);
    case AlphaMode::gray_level: return 1.0 / 255.0;
    case AlphaMode::explicit_value: return alpha_value;
  }
  return eps / static_cast<double>(iters);
}

void AttackConfig::validate() const {
  if (!(eps >= 0.0 && eps <= 1.0)) fail(ErrorCode::invalid_argument, "attack: eps must lie in [0,1]");
  if (iters < 1) fail(ErrorCode::invalid_argument, "attack: iters must be >= 1");
  if (alpha_mode == AlphaMode::explicit_value && !(alpha_value > 0.0))
    fail(ErrorCode::invalid_argument, "attack: alpha must be positive");
}

std::string AttackConfig::descriptor() const {
  std::ostringstream os;
  os << (iters == 1 && alpha() == eps ? "fgsm" : "ifgsm") << '-' << to_string(objective);
  if (target == AttackTarget::composite_c) os << "-composite";
  if (self_target) os << "-self";
  return os.str();
}

Tensor clip_eps(const Tensor& x_t, const Tensor& x, double eps) {
  if (x_t.shape() != x.shape())
    fail(ErrorCode::shape_mismatch, "clip_eps: " + to_string(x_t.shape()) + " vs " + to_string(x.shape()));
  if (x_t.dtype() != x.dtype()) fail(ErrorCode::invalid_argument, "clip_eps: dtype mismatch");
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto xt = x_t.data<T>();
    const auto x0 = x.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const double lo = std::max(0.0, static_cast<double>(x0[i]) - eps);
      const double hi = std::min(1.0, static_cast<double>(x0[i]) + eps);
      dst[i] = static_cast<T>(std::clamp(static_cast<double>(xt[i]), lo, hi));
    }
  });
  return out;
}

namespace {

double linf_distance(const Tensor& a, const Tensor& b) {
  const auto av = a.values();
  const auto bv = b.values();
  double m = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

}  // namespace

AttackResult ifgsm(const DepthModel& model, const Tensor& x, const Tensor& ybar, const AttackConfig& cfg) {
  cfg.validate();
  const double alpha = cfg.alpha();
  const Tensor clean = x.detach();
  const Tensor target = cfg.self_target ? model(clean).detach() : ybar.detach();

  AttackResult result;
  Tensor x_star = clean.clone();
  for (std::size_t t = 1; t <= cfg.iters; ++t) {
    Tensor leaf = x_star.clone();
    leaf.set_requires_grad(true);
    const Tensor objective = attack_objective(cfg.objective, model(leaf), target);
    if (t == 1) result.objective_before = objective.item();
    backward(objective);
    const Tensor grad = leaf.grad();
    try {
      check_finite(grad, "input gradient");
    } catch (const Error& e) {
      fail(ErrorCode::non_finite, "ifgsm iteration " + std::to_string(t) + ": " + e.what());
    }
    const Tensor stepped = add(x_star, scalar_mul(sign(grad), alpha));
    x_star = clip_eps(stepped, clean, cfg.eps);
    result.iterations_run = t;
  }
  result.objective_after = attack_objective(cfg.objective, model(x_star), target).item();
  result.linf = linf_distance(x_star, clean);
  result.x_star = x_star;
  return result;
}

AttackResult fgsm(const DepthModel& model, const Tensor& x, const Tensor& ybar, double eps, LossKind objective) {
  AttackConfig cfg;
  cfg.eps = eps;
  cfg.iters = 1;
  cfg.alpha_mode = AlphaMode::eps_split;
  cfg.objective = objective;
  return ifgsm(model, x, ybar, cfg);
}

DepthModel plain_model(const ParameterStore& depth_net) {
  const ParameterStore n = depth_net.frozen();
  return [n](const Tensor& x) { return forward_depth(n, x); };
}

DepthModel composite_model(const ParameterStore& depth_net, const ParameterStore& saliency_net) {
  const ParameterStore n = depth_net.frozen();
  const ParameterStore g = saliency_net.frozen();
  return [n, g](const Tensor& x) { return forward_depth(n, apply_mask(x, forward_saliency(g, x))); };
}

AttackResult attack_composite(const ParameterStore& depth_net, const ParameterStore& saliency_net,
                              const Tensor& x, const Tensor& ybar, const AttackConfig& cfg) {
  if (cfg.target != AttackTarget::composite_c)
    fail(ErrorCode::invalid_argument, "attack_composite requires target = composite");
  return ifgsm(composite_model(depth_net, saliency_net), x, ybar, cfg);
}

}  // namespace depthguard

namespace depthguard {

std::string provenance_text(const AttackConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "attack=" << cfg.descriptor() << '\n'
     << "eps=" << cfg.eps << '\n'
     << "iters=" << cfg.iters << '\n'
     << "alpha=" << cfg.alpha() << '\n'
     << "alpha_mode=" << (cfg.alpha_mode == AlphaMode::gray_level ? "gray-level" : cfg.alpha_mode == AlphaMode::eps_split ? "eps-split" : "explicit") << '\n'
     << "loss=" << to_string(cfg.objective) << '\n'
     << "target=" << (cfg.target == AttackTarget::composite_c ? "composite" : "plain") << '\n'
     << "self=" << (cfg.self_target ? 1 : 0) << '\n'
     << "seed=" << cfg.seed << '\n';
  return os.str();
}

AttackConfig parse_provenance(std::string_view text) {
  AttackConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  double alpha = 0.0;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "eps") cfg.eps = std::stod(value);
      else if (key == "iters") cfg.iters = std::stoul(value);
      else if (key == "alpha") alpha = std::stod(value);
      else if (key == "alpha_mode") cfg.alpha_mode = value == "gray-level" ? AlphaMode::gray_level : value == "explicit" ? AlphaMode::explicit_value : AlphaMode::eps_split;
      else if (key == "loss") cfg.objective = parse_loss_kind(value);
      else if (key == "target") cfg.target = value == "composite" ? AttackTarget::composite_c : AttackTarget::plain_n;
      else if (key == "self") cfg.self_target = value == "1";
      else if (key == "seed") cfg.seed = std::stoull(value);
    } catch (const std::logic_error&) {
      fail(ErrorCode::format, "malformed provenance value for '" + key + "': " + value);
    }
  }
  if (cfg.alpha_mode == AlphaMode::explicit_value) cfg.alpha_value = alpha;
  return cfg;
}

}  // namespace depthguard
