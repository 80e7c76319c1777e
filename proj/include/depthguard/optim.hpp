#pragma once

#include <vector>

#include "depthguard/tensor.hpp"

namespace depthguard {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty folded into the gradient (coupled decay).
  double weight_decay = 1e-4;
};

/// Adam over a fixed list of leaf tensors. Only tensors handed to the
/// constructor are ever updated.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  /// Applies one update from the accumulated grads; parameters without a
  /// grad are skipped. Grads are left untouched.
  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamOptions options_;
  std::size_t t_ = 0;
};

}  // namespace depthguard
