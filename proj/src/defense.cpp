#include "depthguard/defense.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "depthguard/ops.hpp"
#include "depthguard/parallel.hpp"

namespace depthguard {

Tensor apply_mask(const Tensor& x, const Tensor& mask) {
  if (x.ndim() != 3 || mask.ndim() != 3 || mask.dim(0) != 1 || x.dim(1) != mask.dim(1) || x.dim(2) != mask.dim(2))
    fail(ErrorCode::shape_mismatch, "apply_mask: image " + to_string(x.shape()) + " vs mask " + to_string(mask.shape()));
  if (x.dtype() != mask.dtype()) fail(ErrorCode::invalid_argument, "apply_mask: dtype mismatch");
  const std::size_t c = x.dim(0);
  const std::size_t plane = x.dim(1) * x.dim(2);
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto xv = x.data<T>();
    const auto mv = mask.data<T>();
    auto ov = out.mutable_data<T>();
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) ov[ch * plane + i] = xv[ch * plane + i] * mv[i];
  });
  check_finite(out, "apply_mask");
  const Tensor xd = x.detach();
  const Tensor md = mask.detach();
  return record(out, "apply_mask", {x, mask}, [xd, md, c, plane](const Tensor& g) {
    Tensor gx = Tensor::zeros(xd.shape(), g.dtype());
    Tensor gm = Tensor::zeros(md.shape(), g.dtype());
    dispatch(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const auto xv = xd.data<T>();
      const auto mv = md.data<T>();
      const auto gv = g.data<T>();
      auto gxv = gx.mutable_data<T>();
      auto gmv = gm.mutable_data<T>();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) {
          gxv[ch * plane + i] = gv[ch * plane + i] * mv[i];
          gmv[i] += gv[ch * plane + i] * xv[ch * plane + i];
        }
    });
    return std::vector<Tensor>{gx, gm};
  });
}

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::config, "train: epochs must be >= 1");
  if (batch < 1) fail(ErrorCode::config, "train: batch must be >= 1");
  if (!(lambda >= 0.0)) fail(ErrorCode::config, "train: lambda must be >= 0");
  if (!(adv_prob >= 0.0 && adv_prob <= 1.0)) fail(ErrorCode::config, "train: adv_prob must lie in [0,1]");
  if (!(eps_range.first >= 0.0 && eps_range.first <= eps_range.second && eps_range.second <= 1.0))
    fail(ErrorCode::config, "train: eps_range must satisfy 0 <= lo <= hi <= 1");
  if (!(iter_range.first >= 1.0 && iter_range.first <= iter_range.second))
    fail(ErrorCode::config, "train: iter_range must satisfy 1 <= lo <= hi");
  if (!(adam.lr > 0.0)) fail(ErrorCode::config, "train: lr must be positive");
}

BranchDraw draw_branch(Rng& rng, const TrainConfig& cfg) {
  BranchDraw d;
  d.p = rng.uniform();
  d.adversarial = d.p > 1.0 - cfg.adv_prob;
  if (d.adversarial) {
    d.eps = rng.uniform(cfg.eps_range.first, cfg.eps_range.second);
    d.iters = static_cast<std::size_t>(std::floor(rng.uniform(cfg.iter_range.first, cfg.iter_range.second)));
    if (d.iters < 1) d.iters = 1;
  }
  return d;
}

LossBreakdown saliency_objective(const ParameterStore& depth_net, const ParameterStore& saliency_net,
                                 const Tensor& x, const Tensor& ybar, double lambda) {
  const Tensor mask = forward_saliency(saliency_net, x);
  LossBreakdown b = l_dif(forward_depth(depth_net, apply_mask(x, mask)), ybar);
  b.sparsity = sparsity(mask);
  b.lambda = lambda;
  return b;
}

namespace {

Tensor objective_of(const LossBreakdown& b) {
  return b.sparsity ? add(b.total, scalar_mul(*b.sparsity, b.lambda)) : b.total;
}

using LossFn = std::function<LossBreakdown(const Tensor& x, const Tensor& ybar)>;
using PerturbFn = std::function<Tensor(const Tensor& x, const Tensor& ybar, const BranchDraw& draw)>;

Tensor inner_ifgsm(const DepthModel& model, const Tensor& x, const Tensor& ybar, const BranchDraw& draw) {
  AttackConfig ac;
  ac.eps = draw.eps;
  ac.iters = draw.iters;
  ac.alpha_mode = AlphaMode::eps_split;
  ac.objective = LossKind::L1;
  return ifgsm(model, x, ybar, ac).x_star;
}

TrainResult train_loop(ParameterStore params, const Dataset& train, const TrainConfig& cfg, const LossFn& loss,
                       const PerturbFn& perturb) {
  cfg.validate();
  if (train.size() == 0) fail(ErrorCode::invalid_argument, "train: dataset is empty");
  const std::size_t n = train.size();
  const std::size_t per_epoch = cfg.iters_per_epoch == 0 ? n : cfg.iters_per_epoch;

  Adam optimizer(params.tensors(), cfg.adam);
  Rng rng(cfg.seed);
  TrainResult result{params, {}, {}};
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochLog log;
    log.epoch = epoch;
    optimizer.zero_grad();
    for (std::size_t it = 0; it < per_epoch; ++it) {
      const std::size_t index = order[it % n];
      const BranchDraw draw = draw_branch(rng, cfg);
      result.audit.sample_order.push_back(index);
      result.audit.draws.push_back(draw);
      (draw.adversarial ? result.audit.adversarial_iterations : result.audit.clean_iterations) += 1;
      if (draw.adversarial) log.adversarial_iterations += 1;

      const SampleRecord& rec = train.records[index];
      try {
        const Tensor x = draw.adversarial ? perturb(rec.image, rec.depth, draw) : rec.image;
        const LossBreakdown b = loss(x, rec.depth);
        Tensor objective = objective_of(b);
        log.l_depth += b.l_depth.item();
        log.l_grad += b.l_grad.item();
        log.l_normal += b.l_normal.item();
        log.total += b.total.item();
        if (b.sparsity) log.sparsity += b.sparsity->item();
        log.objective += objective.item();
        if (cfg.batch > 1) objective = scalar_mul(objective, 1.0 / static_cast<double>(cfg.batch));
        backward(objective);
      } catch (const Error& e) {
        fail(e.code(), "epoch " + std::to_string(epoch) + " iteration " + std::to_string(it + 1) + ": " + e.what());
      }
      if ((it + 1) % cfg.batch == 0 || it + 1 == per_epoch) {
        optimizer.step();
        optimizer.zero_grad();
      }
    }
    const double denom = static_cast<double>(per_epoch);
    log.l_depth /= denom;
    log.l_grad /= denom;
    log.l_normal /= denom;
    log.total /= denom;
    log.sparsity /= denom;
    log.objective /= denom;
    result.epochs.push_back(log);
  }
  result.params.epoch = static_cast<std::uint32_t>(cfg.epochs);
  result.params.seed = cfg.seed;
  return result;
}

// Initialization draws come from a stream separate from the training draws.
std::uint64_t init_seed(std::uint64_t seed, NetRole role) {
  return Rng(seed).split(0x1000 + static_cast<std::uint64_t>(role)).bits();
}

void require_role(const ParameterStore& store, NetRole role, const char* what) {
  if (store.spec().role != role)
    fail(ErrorCode::invalid_argument, std::string(what) + ": expected a " + std::string(to_string(role)) +
                                          " network, got " + std::string(to_string(store.spec().role)));
}

TrainResult train_saliency(const ParameterStore& depth_net, const NetworkSpec& spec, const Dataset& train,
                           const TrainConfig& cfg, ModelTag tag) {
  require_role(depth_net, NetRole::depth, "train saliency");
  if (spec.role != NetRole::saliency) fail(ErrorCode::invalid_argument, "train saliency: spec role must be saliency");
  const ParameterStore n = depth_net.frozen();
  const ParameterStore g = build_network(spec, init_seed(cfg.seed, NetRole::saliency));
  const double lambda = cfg.lambda;
  const DepthModel target = plain_model(n);
  TrainResult r = train_loop(
      g, train, cfg, [&](const Tensor& x, const Tensor& ybar) { return saliency_objective(n, g, x, ybar, lambda); },
      [&](const Tensor& x, const Tensor& ybar, const BranchDraw& d) { return inner_ifgsm(target, x, ybar, d); });
  r.params.tag = tag;
  return r;
}

TrainResult train_depth_impl(const NetworkSpec& spec, const Dataset& train, const TrainConfig& cfg, ModelTag tag) {
  if (spec.role != NetRole::depth) fail(ErrorCode::invalid_argument, "train depth: spec role must be depth");
  const ParameterStore n = build_network(spec, init_seed(cfg.seed, NetRole::depth));
  TrainResult r = train_loop(
      n, train, cfg, [&](const Tensor& x, const Tensor& ybar) { return l_dif(forward_depth(n, x), ybar); },
      [&](const Tensor& x, const Tensor& ybar, const BranchDraw& d) { return inner_ifgsm(plain_model(n), x, ybar, d); });
  r.params.tag = tag;
  return r;
}

}  // namespace

TrainResult train_saliency_adv(const ParameterStore& depth_net, const NetworkSpec& spec, const Dataset& train,
                               const TrainConfig& cfg) {
  return train_saliency(depth_net, spec, train, cfg, ModelTag::G_adv);
}

TrainResult train_saliency_clean(const ParameterStore& depth_net, const NetworkSpec& spec, const Dataset& train,
                                 TrainConfig cfg) {
  cfg.adv_prob = 0.0;
  return train_saliency(depth_net, spec, train, cfg, ModelTag::G);
}

TrainResult train_depth(const NetworkSpec& spec, const Dataset& train, TrainConfig cfg) {
  cfg.adv_prob = 0.0;
  return train_depth_impl(spec, train, cfg, ModelTag::N);
}

TrainResult train_depth_adv(const NetworkSpec& spec, const Dataset& train, const TrainConfig& cfg) {
  return train_depth_impl(spec, train, cfg, ModelTag::N_adv);
}

std::string_view to_string(ConfigurationId id) noexcept {
  switch (id) {
    case ConfigurationId::A: return "A";
    case ConfigurationId::B: return "B";
    case ConfigurationId::C: return "C";
    case ConfigurationId::D: return "D";
    case ConfigurationId::E: return "E";
    case ConfigurationId::F: return "F";
  }
  return "?";
}

ConfigurationId parse_configuration(std::string_view text) {
  if (text.size() == 1 && text[0] >= 'A' && text[0] <= 'F') return static_cast<ConfigurationId>(text[0] - 'A');
  fail(ErrorCode::invalid_argument, "unknown configuration '" + std::string(text) + "' (expected A-F)");
}

std::string describe(ConfigurationId id) {
  switch (id) {
    case ConfigurationId::A: return "N(x*)";
    case ConfigurationId::B: return "N(x)";
    case ConfigurationId::C: return "N_adv(x*)";
    case ConfigurationId::D: return "N(x* G(x*))";
    case ConfigurationId::E: return "N(x* G(x))";
    case ConfigurationId::F: return "N(x* G_adv(x*))";
  }
  return "?";
}

Dataset generate_adversarial(const ParameterStore& depth_net, const Dataset& clean, const AttackConfig& cfg,
                             const ParameterStore* saliency_net) {
  cfg.validate();
  require_role(depth_net, NetRole::depth, "attack");
  DepthModel model;
  if (cfg.target == AttackTarget::composite_c) {
    if (saliency_net == nullptr) fail(ErrorCode::missing_checkpoint, "composite attack requires checkpoint G");
    require_role(*saliency_net, NetRole::saliency, "attack");
    model = composite_model(depth_net, *saliency_net);
  } else {
    model = plain_model(depth_net);
  }
  Dataset out;
  out.records.resize(clean.size());
  out.provenance = provenance_text(cfg);
  parallel_for(clean.size(), [&](std::size_t i) {
    const SampleRecord& rec = clean.records[i];
    SampleRecord adv = rec;
    adv.image = cfg.eps == 0.0 ? rec.image.clone() : ifgsm(model, rec.image, rec.depth, cfg).x_star;
    out.records[i] = adv;
  });
  return out;
}

namespace {

const ParameterStore& need(const std::optional<ParameterStore>& store, const char* role, ConfigurationId id) {
  if (!store)
    fail(ErrorCode::missing_checkpoint,
         "configuration " + std::string(to_string(id)) + " requires checkpoint " + role);
  return *store;
}

}  // namespace

PanelFn configuration_dataflow(ConfigurationId id, const ModelSet& models, const Dataset& clean,
                               const Dataset& adversarial) {
  if (clean.size() == 0) fail(ErrorCode::invalid_argument, "eval: dataset is empty");
  if (id != ConfigurationId::B && adversarial.size() != clean.size())
    fail(ErrorCode::invalid_argument, "eval: adversarial split has " + std::to_string(adversarial.size()) +
                                          " records, clean split has " + std::to_string(clean.size()));
  for (std::size_t i = 0; id != ConfigurationId::B && i < clean.size(); ++i)
    if (adversarial.records[i].image.shape() != clean.records[i].image.shape())
      fail(ErrorCode::shape_mismatch, "eval: adversarial record " + std::to_string(i) + " shape differs from clean");
  const Dataset* xs = &adversarial;
  const Dataset* xc = &clean;
  const auto masked = [xs](const ParameterStore& n, const Tensor& mask, std::size_t i) {
    return PanelOutput{forward_depth(n, apply_mask(xs->records[i].image, mask)), mask};
  };
  switch (id) {
    case ConfigurationId::A: {
      const ParameterStore n = need(models.n, "N", id).frozen();
      return [=](std::size_t i) { return PanelOutput{forward_depth(n, xs->records[i].image), std::nullopt}; };
    }
    case ConfigurationId::B: {
      const ParameterStore n = need(models.n, "N", id).frozen();
      return [=](std::size_t i) { return PanelOutput{forward_depth(n, xc->records[i].image), std::nullopt}; };
    }
    case ConfigurationId::C: {
      const ParameterStore na = need(models.n_adv, "N_adv", id).frozen();
      return [=](std::size_t i) { return PanelOutput{forward_depth(na, xs->records[i].image), std::nullopt}; };
    }
    case ConfigurationId::D:
    case ConfigurationId::F: {
      const ParameterStore n = need(models.n, "N", id).frozen();
      const ParameterStore g = id == ConfigurationId::D ? need(models.g, "G", id).frozen()
                                                        : need(models.g_adv, "G_adv", id).frozen();
      return [=](std::size_t i) { return masked(n, forward_saliency(g, xs->records[i].image), i); };
    }
    case ConfigurationId::E: {
      const ParameterStore n = need(models.n, "N", id).frozen();
      const ParameterStore g = need(models.g, "G", id).frozen();
      return [=](std::size_t i) { return masked(n, forward_saliency(g, xc->records[i].image), i); };
    }
  }
  fail(ErrorCode::invalid_argument, "unknown configuration");
}

EvalReport evaluate_configuration(ConfigurationId id, const ModelSet& models, const Dataset& clean,
                                  const Dataset& adversarial, const AttackConfig& attack) {
  const PanelFn panel = configuration_dataflow(id, models, clean, adversarial);
  const std::function<Tensor(std::size_t)> predict = [&](std::size_t i) { return panel(i).depth; };
  EvalReport report = evaluate_dataset(predict, clean);
  report.config_id = std::string(to_string(id));
  report.attack = id == ConfigurationId::B ? "none" : attack.descriptor();
  report.eps = id == ConfigurationId::B ? 0.0 : attack.eps;
  report.iters = id == ConfigurationId::B ? 0 : attack.iters;
  return report;
}

EvalReport evaluate_configuration(ConfigurationId id, const ModelSet& models, const Dataset& clean,
                                  const AttackConfig& attack) {
  if (id == ConfigurationId::B) return evaluate_configuration(id, models, clean, clean, attack);
  // x* targets N for every panel except C, whose white-box target is N_adv.
  const ParameterStore& victim = id == ConfigurationId::C ? need(models.n_adv, "N_adv", id) : need(models.n, "N", id);
  const ParameterStore* g = nullptr;
  if (attack.target == AttackTarget::composite_c) g = &need(models.g, "G", id);
  return evaluate_configuration(id, models, clean, generate_adversarial(victim, clean, attack, g), attack);
}

double mean_mask_value(const ParameterStore& saliency_net, const Dataset& data) {
  require_role(saliency_net, NetRole::saliency, "mean_mask_value");
  if (data.size() == 0) fail(ErrorCode::invalid_argument, "mean_mask_value: dataset is empty");
  const ParameterStore g = saliency_net.frozen();
  std::vector<double> means(data.size());
  parallel_for(data.size(), [&](std::size_t i) { means[i] = mean(forward_saliency(g, data.records[i].image)).item(); });
  double s = 0.0;
  for (double m : means) s += m;
  return s / static_cast<double>(means.size());
}

}  // namespace depthguard
