#include "depthguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "depthguard/data.hpp"
#include "depthguard/network.hpp"
#include "depthguard/parallel.hpp"

namespace depthguard {

namespace {

struct Pair {
  std::vector<double> est, gt;
};

Pair unpack(const Tensor& y, const Tensor& ybar, const char* what) {
  if (y.shape() != ybar.shape())
    fail(ErrorCode::shape_mismatch, std::string(what) + ": estimate " + to_string(y.shape()) + " vs ground truth " +
                                        to_string(ybar.shape()));
  return {y.values(), ybar.values()};
}

double floored(double d) { return std::max(d, kDepthFloor); }

}  // namespace

double rmse(const Tensor& y, const Tensor& ybar) {
  const auto p = unpack(y, ybar, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.est.size(); ++i) acc += (p.gt[i] - p.est[i]) * (p.gt[i] - p.est[i]);
  return std::sqrt(acc / static_cast<double>(p.est.size()));
}

double rel(const Tensor& y, const Tensor& ybar) {
  const auto p = unpack(y, ybar, "rel");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.est.size(); ++i) {
    const double gt = floored(p.gt[i]);
    acc += std::abs(gt - floored(p.est[i])) / gt;
  }
  return acc / static_cast<double>(p.est.size());
}

double log10err(const Tensor& y, const Tensor& ybar) {
  const auto p = unpack(y, ybar, "log10");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.est.size(); ++i)
    acc += std::abs(std::log10(floored(p.gt[i])) - std::log10(floored(p.est[i])));
  return acc / static_cast<double>(p.est.size());
}

double delta(const Tensor& y, const Tensor& ybar, int k) {
  if (k < 1 || k > 3) fail(ErrorCode::invalid_argument, "delta: k must be 1, 2 or 3");
  const auto p = unpack(y, ybar, "delta");
  const double threshold = std::pow(1.25, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.est.size(); ++i) {
    const double a = floored(p.est[i]), b = floored(p.gt[i]);
    if (std::max(a / b, b / a) < threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(p.est.size());
}

EvalReport image_metrics(const Tensor& y, const Tensor& ybar) {
  EvalReport r;
  r.rmse = rmse(y, ybar);
  r.rel = rel(y, ybar);
  r.log10 = log10err(y, ybar);
  r.delta1 = delta(y, ybar, 1);
  r.delta2 = delta(y, ybar, 2);
  r.delta3 = delta(y, ybar, 3);
  r.n_samples = 1;
  return r;
}

EvalReport average_reports(std::span<const EvalReport> per_image) {
  if (per_image.empty()) fail(ErrorCode::invalid_argument, "cannot average an empty set of reports");
  EvalReport out;
  for (const auto& r : per_image) {
    out.rmse += r.rmse;
    out.rel += r.rel;
    out.log10 += r.log10;
    out.delta1 += r.delta1;
    out.delta2 += r.delta2;
    out.delta3 += r.delta3;
  }
  const double n = static_cast<double>(per_image.size());
  out.rmse /= n;
  out.rel /= n;
  out.log10 /= n;
  out.delta1 /= n;
  out.delta2 /= n;
  out.delta3 /= n;
  out.n_samples = per_image.size();
  return out;
}

EvalReport evaluate_dataset(const std::function<Tensor(std::size_t)>& predict, const Dataset& dataset) {
  if (dataset.records.empty()) fail(ErrorCode::invalid_argument, "evaluate_dataset: empty split");
  std::vector<EvalReport> per_image(dataset.records.size());
  parallel_for(dataset.records.size(), [&](std::size_t i) {
    per_image[i] = image_metrics(predict(i), dataset.records[i].depth);
  });
  return average_reports(per_image);
}

std::string csv_row(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu", r.config_id.c_str(),
                r.attack.c_str(), r.eps, r.iters, r.rmse, r.rel, r.log10, r.delta1, r.delta2, r.delta3, r.n_samples);
  return buf;
}

}  // namespace depthguard
