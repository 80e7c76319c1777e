#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "depthguard/attack.hpp"
#include "depthguard/data.hpp"
#include "depthguard/losses.hpp"
#include "depthguard/metrics.hpp"
#include "depthguard/network.hpp"
#include "depthguard/optim.hpp"
#include "depthguard/rng.hpp"

namespace depthguard {

/// x: [C,H,W], m: [1,H,W] in [0,1]; every channel of x is multiplied by m.
/// Differentiable in both arguments.
Tensor apply_mask(const Tensor& x, const Tensor& mask);

struct TrainConfig {
  std::size_t epochs = 20;
  /// 0 means one pass over the training set per epoch.
  std::size_t iters_per_epoch = 0;
  double lambda = 1.0;
  AdamOptions adam{};
  double adv_prob = 0.5;
  std::pair<double, double> eps_range{0.01, 0.3};
  std::pair<double, double> iter_range{1.0, 10.0};
  /// Gradients of `batch` consecutive samples are summed (scaled by
  /// 1/batch) before each optimizer step.
  std::size_t batch = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Outcome of the per-iteration coin flip. With adv_prob = q the sample is
/// perturbed when p > 1 - q, which is the literal p > 0.5 test at q = 0.5.
struct BranchDraw {
  double p = 0.0;
  bool adversarial = false;
  double eps = 0.0;
  std::size_t iters = 0;
};

/// Consumes p, then (only on the adversarial branch) eps ~ U(eps_range) and
/// T = floor(U(iter_range)), in that order.
BranchDraw draw_branch(Rng& rng, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double l_depth = 0, l_grad = 0, l_normal = 0, total = 0, sparsity = 0, objective = 0;
  std::size_t adversarial_iterations = 0;
};

/// Record of every stochastic choice made during a run.
struct AuditLog {
  std::size_t adversarial_iterations = 0;
  std::size_t clean_iterations = 0;
  std::vector<std::size_t> sample_order;
  std::vector<BranchDraw> draws;
};

struct TrainResult {
  ParameterStore params;
  std::vector<EpochLog> epochs;
  AuditLog audit;
};

/// l_dif(N(x' * G(x')), ybar) + lambda * sparsity(G(x')); `depth_net` is
/// used as given, so pass a frozen store to keep it out of the graph.
LossBreakdown saliency_objective(const ParameterStore& depth_net, const ParameterStore& saliency_net,
                                 const Tensor& x, const Tensor& ybar, double lambda);

/// Adversarial training of the saliency network against a frozen depth
/// network. Adversarial inputs come from IFGSM on N alone (L1 vs ybar,
/// alpha = eps / T).
TrainResult train_saliency_adv(const ParameterStore& depth_net, const NetworkSpec& saliency_spec,
                               const Dataset& train, const TrainConfig& cfg);
/// Same loop restricted to the clean branch (adv_prob forced to 0).
TrainResult train_saliency_clean(const ParameterStore& depth_net, const NetworkSpec& saliency_spec,
                                 const Dataset& train, TrainConfig cfg);

/// Trains N on l_dif against ground truth (adv_prob forced to 0).
TrainResult train_depth(const NetworkSpec& spec, const Dataset& train, TrainConfig cfg);
/// Trains N_adv with the same clean/adversarial sampling, perturbing
/// against the current weights of the network being trained.
TrainResult train_depth_adv(const NetworkSpec& spec, const Dataset& train, const TrainConfig& cfg);

/// The six dataflows: A N(x*), B N(x), C N_adv(x*), D N(x* G(x*)),
/// E N(x* G(x)), F N(x* G_adv(x*)).
enum class ConfigurationId { A, B, C, D, E, F };

std::string_view to_string(ConfigurationId id) noexcept;
ConfigurationId parse_configuration(std::string_view text);
std::string describe(ConfigurationId id);

struct ModelSet {
  std::optional<ParameterStore> n, n_adv, g, g_adv;
};

/// Perturbs every record of `clean` against N (or N(x G(x)) when the
/// config targets the composite). Records keep their ground truth and
/// scene seeds; provenance records the configuration.
Dataset generate_adversarial(const ParameterStore& depth_net, const Dataset& clean, const AttackConfig& cfg,
                             const ParameterStore* saliency_net = nullptr);

/// Depth estimate of one record and, for masked panels, the mask applied.
struct PanelOutput {
  Tensor depth;
  std::optional<Tensor> mask;
};
using PanelFn = std::function<PanelOutput(std::size_t)>;

/// The dataflow of panel `id` for record i. `clean` and `adversarial` must
/// outlive the returned function.
PanelFn configuration_dataflow(ConfigurationId id, const ModelSet& models, const Dataset& clean,
                               const Dataset& adversarial);

/// Runs configuration `id` over aligned clean / adversarial splits.
EvalReport evaluate_configuration(ConfigurationId id, const ModelSet& models, const Dataset& clean,
                                  const Dataset& adversarial, const AttackConfig& attack);

/// Generates the adversarial split against N first, then evaluates.
EvalReport evaluate_configuration(ConfigurationId id, const ModelSet& models, const Dataset& clean,
                                  const AttackConfig& attack);

/// Mean of G(x) over a split.
double mean_mask_value(const ParameterStore& saliency_net, const Dataset& data);

}  // namespace depthguard
