#include "depthguard/optim.hpp"

#include <cmath>

namespace depthguard {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    if (!p.is_leaf() || !p.requires_grad())
      fail(ErrorCode::invalid_argument, "Adam: parameters must be leaf tensors that require grad");
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.has_grad()) continue;
    const Tensor g = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    dispatch(p.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto pv = p.mutable_data<T>();
      const auto gv = g.data<T>();
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double grad = static_cast<double>(gv[i]) + options_.weight_decay * static_cast<double>(pv[i]);
        m[i] = b1 * m[i] + (1.0 - b1) * grad;
        v[i] = b2 * v[i] + (1.0 - b2) * grad * grad;
        const double update = options_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.eps);
        pv[i] = static_cast<T>(static_cast<double>(pv[i]) - update);
      }
    });
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace depthguard
