#include <cmath>

#include "doctest.h"
#include "depthguard/attack.hpp"
#include "depthguard/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/suites.hpp"

using namespace depthguard;

namespace {

Tensor image(std::uint64_t seed, std::size_t h = 16, std::size_t w = 16, Dtype dtype = Dtype::f32) {
  Rng rng(seed);
  return testing::random_tensor({3, h, w}, rng, 0, 1).to(dtype);
}

struct Victim {
  ParameterStore net;
  DepthModel model;
};

Victim victim(std::uint64_t seed) {
  ParameterStore p = build_network(depth_spec(16, 16, {4, 8, 8}), seed);
  return {p, plain_model(p)};
}

}  // namespace

TEST_CASE("clip_eps band and range clamps") {
  Tensor x = Tensor::from_values({3}, {0.5, 0.05, 0.3}, Dtype::f64);
  CHECK(clip_eps(x, x, 0.1).bitwise_equal(x));
  Tensor xt = Tensor::from_values({3}, {0.9, -0.2, 0.31}, Dtype::f64);
  const auto out = clip_eps(xt, x, 0.1).values();
  CHECK(out[0] == doctest::Approx(0.6));
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 0.31);
}

TEST_CASE("eps = 0 leaves x bitwise unchanged for any T") {
  const Victim v = victim(1);
  Tensor x = image(2);
  Tensor ybar = Tensor::full({1, 8, 8}, 3.0);
  for (std::size_t t : {1, 3, 10}) {
    AttackConfig cfg;
    cfg.eps = 0.0;
    cfg.iters = t;
    CHECK(ifgsm(v.model, x, ybar, cfg).x_star.bitwise_equal(x));
  }
  CHECK(fgsm(v.model, x, ybar, 0.0).x_star.bitwise_equal(x));
}

TEST_CASE("ifgsm with T=1, alpha=eps equals fgsm bitwise") {
  const Victim v = victim(3);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    Tensor x = image(s);
    Tensor ybar = Tensor::full({1, 8, 8}, 2.0 + static_cast<double>(s) * 0.1);
    for (LossKind k : {LossKind::L1, LossKind::L2, LossKind::REL, LossKind::LOG10, LossKind::LDIF}) {
      AttackConfig cfg;
      cfg.eps = 0.07;
      cfg.iters = 1;
      cfg.objective = k;
      CHECK(cfg.alpha() == cfg.eps);
      CHECK(ifgsm(v.model, x, ybar, cfg).x_star.bitwise_equal(fgsm(v.model, x, ybar, 0.07, k).x_star));
    }
  }
}

TEST_CASE("linear model: one step moves each pixel by alpha * sign(w)") {
  Rng rng(11);
  Tensor w = testing::signed_away_from_zero({1, 2, 5}, rng, 0.1, 1.0);
  Tensor x = testing::random_tensor({1, 2, 5}, rng, 0.3, 0.7);
  // sum(w x) > 0 keeps the L1 objective |0 - y| on the branch with d/dy = +1.
  const DepthModel model = [w](const Tensor& in) { return add_scalar(sum(mul(w, in)), 10.0); };
  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.iters = 1;
  const Tensor x_star = ifgsm(model, x, Tensor::zeros({1}, Dtype::f64), cfg).x_star;
  const auto xs = x_star.values(), x0 = x.values(), wv = w.values();
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(xs[i] == doctest::Approx(x0[i] + 0.05 * (wv[i] > 0 ? 1 : -1)));
}

TEST_CASE("fgsm moves every pixel by eps unless a range clamp binds") {
  Rng rng(12);
  Tensor w = testing::signed_away_from_zero({1, 3, 3}, rng, 0.1, 1.0);
  Tensor x = testing::random_tensor({1, 3, 3}, rng, 0.2, 0.8);
  const DepthModel model = [w](const Tensor& in) { return add_scalar(sum(mul(w, in)), 10.0); };
  const Tensor x_star = fgsm(model, x, Tensor::zeros({1}, Dtype::f64), 0.1).x_star;
  const auto xs = x_star.values(), x0 = x.values();
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(xs[i] - x0[i]) == doctest::Approx(0.1));
}

TEST_CASE("200 randomized property cases") {
  for (const auto& c : testing::attack_invariant_suite(200)) {
    INFO(c.name);
    CHECK(c.ok);
  }
}

TEST_CASE("ifgsm raises the objective on a random net") {
  const Victim v = victim(7);
  Tensor x = image(8);
  Tensor ybar = Tensor::full({1, 8, 8}, 4.0);
  AttackConfig cfg;
  cfg.eps = 0.1;
  const AttackResult r = ifgsm(v.model, x, ybar, cfg);
  CHECK(r.objective_after > r.objective_before);
  CHECK(r.iterations_run == 10);
}

TEST_CASE("composite attack: eps = 0 is identity") {
  const Victim v = victim(9);
  const ParameterStore g = build_network(saliency_spec(16, 16, {4, 8, 8}), 10);
  AttackConfig cfg;
  cfg.eps = 0.0;
  cfg.target = AttackTarget::composite_c;
  Tensor x = image(3);
  CHECK(attack_composite(v.net, g, x, Tensor::full({1, 8, 8}, 2.0), cfg).x_star.bitwise_equal(x));
  cfg.target = AttackTarget::plain_n;
  CHECK_THROWS_AS(attack_composite(v.net, g, x, Tensor::full({1, 8, 8}, 2.0), cfg), Error);
}

TEST_CASE("alpha conventions and validation") {
  AttackConfig cfg;
  cfg.eps = 0.1;
  cfg.iters = 4;
  CHECK(cfg.alpha() == doctest::Approx(0.025));
  cfg.alpha_mode = AlphaMode::gray_level;
  CHECK(cfg.alpha() == doctest::Approx(1.0 / 255.0));
  cfg.alpha_mode = AlphaMode::explicit_value;
  cfg.alpha_value = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = AttackConfig{};
  cfg.eps = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.eps = 0.1;
  cfg.iters = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("descriptor and provenance round-trip") {
  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.iters = 1;
  cfg.objective = LossKind::REL;
  CHECK(cfg.descriptor() == "fgsm-rel");
  cfg.iters = 7;
  cfg.alpha_mode = AlphaMode::explicit_value;
  cfg.alpha_value = 0.013;
  cfg.target = AttackTarget::composite_c;
  cfg.self_target = true;
  cfg.seed = 99;
  CHECK(cfg.descriptor() == "ifgsm-rel-composite-self");
  const AttackConfig back = parse_provenance(provenance_text(cfg));
  CHECK(back.eps == cfg.eps);
  CHECK(back.iters == cfg.iters);
  CHECK(back.alpha() == cfg.alpha());
  CHECK(back.objective == cfg.objective);
  CHECK(back.target == cfg.target);
  CHECK(back.self_target);
  CHECK(back.seed == 99);
  CHECK_THROWS_AS(parse_provenance("eps=abc\n"), Error);
}
