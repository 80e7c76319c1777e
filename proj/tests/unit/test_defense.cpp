#include <map>

#include "doctest.h"
#include "depthguard/defense.hpp"
#include "depthguard/ops.hpp"
#include "support/gradcheck.hpp"

using namespace depthguard;

namespace {

constexpr std::size_t kH = 32, kW = 32;

const Dataset& toy_data() {
  static const Dataset ds = synth_generate(21, 48, kH, kW);
  return ds;
}

NetworkSpec small_depth() { return depth_spec(kH, kW, {4, 8, 8}); }
NetworkSpec small_saliency() { return saliency_spec(kH, kW, {4, 8, 8}); }

TrainConfig quick(std::size_t epochs, double lr = 1e-3) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.adam.lr = lr;
  cfg.seed = 5;
  return cfg;
}

const ParameterStore& trained_n() {
  static const ParameterStore n = train_depth(small_depth(), toy_data(), quick(3)).params;
  return n;
}

std::vector<double> grads_of(const ParameterStore& p) {
  std::vector<double> out;
  for (const Tensor& t : p.tensors()) {
    const auto g = t.has_grad() ? t.grad().values() : std::vector<double>(t.numel(), 0.0);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("apply_mask identities") {
  Rng rng(1);
  const Tensor x = testing::random_tensor({3, 4, 5}, rng, 0, 1);
  const Tensor m = testing::random_tensor({1, 4, 5}, rng, 0, 1);
  CHECK(apply_mask(x, Tensor::full({1, 4, 5}, 1.0, Dtype::f64)).bitwise_equal(x));
  for (double v : apply_mask(x, Tensor::zeros({1, 4, 5}, Dtype::f64)).values()) CHECK(v == 0.0);
  const auto lhs = apply_mask(apply_mask(x, m), m).values();
  const auto rhs = apply_mask(x, mul(m, m)).values();
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-15));
  CHECK_THROWS_AS(apply_mask(x, Tensor::zeros({2, 4, 5}, Dtype::f64)), Error);
  CHECK_THROWS_AS(apply_mask(x, Tensor::zeros({1, 4, 4}, Dtype::f64)), Error);
}

TEST_CASE("T = floor(U(1,10)) covers exactly {1..9}") {
  TrainConfig cfg;
  cfg.adv_prob = 1.0;
  Rng rng(123);
  std::map<std::size_t, std::size_t> hist;
  for (int i = 0; i < 100000; ++i) {
    const BranchDraw d = draw_branch(rng, cfg);
    REQUIRE(d.adversarial);
    ++hist[d.iters];
    CHECK(d.eps >= cfg.eps_range.first);
    CHECK(d.eps < cfg.eps_range.second);
  }
  CHECK(hist.size() == 9);
  CHECK(hist.begin()->first == 1);
  CHECK(hist.rbegin()->first == 9);
  for (const auto& [t, count] : hist) CHECK(count > 100000 / 9 * 0.9);
}

TEST_CASE("branch coin: p > 1 - adv_prob") {
  TrainConfig cfg;
  Rng rng(5);
  std::size_t adv = 0;
  for (int i = 0; i < 10000; ++i) {
    const BranchDraw d = draw_branch(rng, cfg);
    CHECK(d.adversarial == (d.p > 0.5));
    adv += d.adversarial;
  }
  CHECK(adv > 4700);
  CHECK(adv < 5300);
  cfg.adv_prob = 0.0;
  for (int i = 0; i < 1000; ++i) CHECK_FALSE(draw_branch(rng, cfg).adversarial);
}

TEST_CASE("saliency objective targets ground truth, not N(x)") {
  const ParameterStore n = trained_n().frozen();
  const ParameterStore g = build_network(small_saliency(), 3);
  const SampleRecord& rec = toy_data().records[0];
  const Tensor n_of_x = forward_depth(n, rec.image);
  REQUIRE(rmse(n_of_x, rec.depth) > 0.1);

  const auto objective_grad = [&](const Tensor& target) {
    for (Tensor t : g.tensors()) t.zero_grad();
    const Tensor mask = forward_saliency(g, rec.image);
    backward(l_dif(forward_depth(n, apply_mask(rec.image, mask)), target).total);
    return grads_of(g);
  };
  const auto toward_gt = objective_grad(rec.depth);
  const auto toward_nx = objective_grad(n_of_x.detach());

  for (Tensor t : g.tensors()) t.zero_grad();
  const LossBreakdown b = saliency_objective(n, g, rec.image, rec.depth, 0.0);
  backward(b.total);
  const auto actual = grads_of(g);
  CHECK(distance(actual, toward_gt) == 0.0);
  CHECK(distance(actual, toward_nx) > 0.0);
  CHECK(b.sparsity.has_value());
}

TEST_CASE("saliency training keeps N bit-identical and respects adv_prob") {
  const ParameterStore before = trained_n().deep_copy();
  TrainConfig cfg = quick(1, 1e-4);
  cfg.iters_per_epoch = 12;
  cfg.iter_range = {1.0, 3.0};
  const TrainResult adv = train_saliency_adv(trained_n(), small_saliency(), toy_data(), cfg);
  CHECK(trained_n().bitwise_equal(before));
  CHECK(adv.audit.adversarial_iterations + adv.audit.clean_iterations == 12);
  CHECK(adv.audit.adversarial_iterations > 0);
  CHECK(adv.params.tag == ModelTag::G_adv);

  cfg.adv_prob = 0.0;
  const TrainResult clean = train_saliency_adv(trained_n(), small_saliency(), toy_data(), cfg);
  CHECK(clean.audit.adversarial_iterations == 0);
  CHECK(train_saliency_clean(trained_n(), small_saliency(), toy_data(), quick(1)).audit.adversarial_iterations == 0);
  CHECK(trained_n().bitwise_equal(before));
}

TEST_CASE("with adv_prob = 0 and lambda = 0 the loop is clean saliency training") {
  TrainConfig cfg = quick(1, 1e-4);
  cfg.iters_per_epoch = 8;
  cfg.adv_prob = 0.0;
  cfg.lambda = 0.0;
  const TrainResult a = train_saliency_adv(trained_n(), small_saliency(), toy_data(), cfg);
  const TrainResult b = train_saliency_clean(trained_n(), small_saliency(), toy_data(), cfg);
  CHECK(a.params.bitwise_equal(b.params));
}

TEST_CASE("stronger sparsity weight gives a sparser mask; masks stay in (0,1)") {
  const auto mask_mean = [&](double lambda) {
    TrainConfig cfg = quick(2, 1e-3);
    cfg.lambda = lambda;
    const ParameterStore g = train_saliency_clean(trained_n(), small_saliency(), toy_data(), cfg).params;
    for (std::size_t i = 0; i < 4; ++i)
      for (double v : forward_saliency(g, toy_data().records[i].image).values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    return mean_mask_value(g, toy_data());
  };
  CHECK(mask_mean(5.0) < mask_mean(0.1));
}

TEST_CASE("depth training: loss falls over five epochs and is deterministic") {
  const TrainResult a = train_depth(small_depth(), toy_data(), quick(5));
  REQUIRE(a.epochs.size() == 5);
  CHECK(a.epochs[4].objective < a.epochs[0].objective);
  const TrainResult b = train_depth(small_depth(), toy_data(), quick(5));
  CHECK(encode_checkpoint(a.params) == encode_checkpoint(b.params));
  CHECK(a.params.tag == ModelTag::N);
  CHECK(a.params.epoch == 5);
}

TEST_CASE("adversarial depth training perturbs against the current weights") {
  TrainConfig cfg = quick(1);
  cfg.iters_per_epoch = 10;
  cfg.iter_range = {1.0, 3.0};
  const TrainResult r = train_depth_adv(small_depth(), toy_data(), cfg);
  CHECK(r.params.tag == ModelTag::N_adv);
  CHECK(r.audit.adversarial_iterations > 0);
}

TEST_CASE("gradient accumulation over a batch") {
  TrainConfig cfg = quick(1);
  cfg.iters_per_epoch = 8;
  cfg.batch = 4;
  const TrainResult batched = train_depth(small_depth(), toy_data(), cfg);
  cfg.batch = 1;
  const TrainResult single = train_depth(small_depth(), toy_data(), cfg);
  CHECK_FALSE(batched.params.bitwise_equal(single.params));
  cfg.batch = 0;
  CHECK_THROWS_AS(train_depth(small_depth(), toy_data(), cfg), Error);
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.eps_range = {0.3, 0.1};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.iter_range = {0.5, 2.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.lambda = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("configurations: A at eps 0 equals B; missing models fail") {
  ModelSet models;
  models.n = trained_n();
  models.g = build_network(small_saliency(), 4);
  models.g_adv = build_network(small_saliency(), 5);
  Dataset test;
  test.records.assign(toy_data().records.begin(), toy_data().records.begin() + 8);

  AttackConfig zero;
  zero.eps = 0.0;
  const Dataset same = generate_adversarial(*models.n, test, zero);
  for (std::size_t i = 0; i < test.size(); ++i) CHECK(same.records[i].image.bitwise_equal(test.records[i].image));
  const EvalReport a = evaluate_configuration(ConfigurationId::A, models, test, same, zero);
  const EvalReport b = evaluate_configuration(ConfigurationId::B, models, test, same, zero);
  CHECK(a.rmse == b.rmse);
  CHECK(a.delta1 == b.delta1);
  CHECK(a.config_id == "A");
  CHECK(b.attack == "none");

  AttackConfig atk;
  atk.eps = 0.05;
  atk.iters = 3;
  const Dataset adv = generate_adversarial(*models.n, test, atk);
  CHECK(parse_provenance(adv.provenance).eps == 0.05);
  CHECK(evaluate_configuration(ConfigurationId::A, models, test, adv, atk).rmse > b.rmse);
  for (ConfigurationId id : {ConfigurationId::D, ConfigurationId::E, ConfigurationId::F}) {
    const EvalReport r = evaluate_configuration(id, models, test, adv, atk);
    CHECK(r.n_samples == test.size());
  }

  try {
    evaluate_configuration(ConfigurationId::C, models, test, adv, atk);
    FAIL("expected missing_checkpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_checkpoint);
  }
  AttackConfig composite = atk;
  composite.target = AttackTarget::composite_c;
  CHECK_THROWS_AS(generate_adversarial(*models.n, test, composite), Error);
  CHECK_NOTHROW(generate_adversarial(*models.n, test, composite, &*models.g));
}

TEST_CASE("configuration ids round-trip") {
  for (ConfigurationId id : {ConfigurationId::A, ConfigurationId::B, ConfigurationId::C, ConfigurationId::D,
                             ConfigurationId::E, ConfigurationId::F}) {
    CHECK(parse_configuration(to_string(id)) == id);
    CHECK_FALSE(describe(id).empty());
  }
  CHECK_THROWS_AS(parse_configuration("G"), Error);
}
