#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "depthguard/tensor.hpp"

namespace depthguard {

struct Dataset;

/// One evaluated configuration: the standard depth benchmark metrics,
/// averaged per image and then over the split.
struct EvalReport {
  double rmse = 0.0;
  double rel = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t n_samples = 0;
  std::string config_id;
  std::string attack;
  double eps = 0.0;
  std::size_t iters = 0;
};

/// Per-image metrics; estimate `y` and ground truth `ybar` share a shape.
/// Ratio and log metrics clamp both maps below at 0.01 m.
double rmse(const Tensor& y, const Tensor& ybar);
double rel(const Tensor& y, const Tensor& ybar);
double log10err(const Tensor& y, const Tensor& ybar);
/// Fraction of pixels with max(y/ybar, ybar/y) < 1.25^k.
double delta(const Tensor& y, const Tensor& ybar, int k);

/// Computes all six metrics for one image pair; n_samples = 1.
EvalReport image_metrics(const Tensor& y, const Tensor& ybar);

/// Averages per-image reports in the given order.
EvalReport average_reports(std::span<const EvalReport> per_image);

/// Runs `predict(i)` for every sample index (in parallel when allowed) and
/// averages the per-image metrics in sample order.
EvalReport evaluate_dataset(const std::function<Tensor(std::size_t)>& predict, const Dataset& dataset);

inline constexpr const char* kReportCsvHeader = "config,attack,eps,iters,rmse,rel,log10,d1,d2,d3,n";
/// Six decimal places, fixed notation, no trailing newline.
std::string csv_row(const EvalReport& report);

}  // namespace depthguard
