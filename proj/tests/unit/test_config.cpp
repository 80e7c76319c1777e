#include <string>

#include "doctest.h"
#include "depthguard/config.hpp"

using namespace depthguard;

namespace {

std::string config_error(std::string_view text) {
  try {
    RunConfig::parse(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("parse sections, comments and lists") {
  const RunConfig c = RunConfig::parse(
      "# toy run\n"
      "[data]\n"
      "n = 64   ; small\n"
      "height = 32\n"
      "width = 32\n"
      "[network]\n"
      "widths = 4, 8, 8\n"
      "dtype = f64\n"
      "[train]\n"
      "lambda = 0.5\n"
      "lr = 3e-4\n"
      "[attack]\n"
      "eps = 0.1\n"
      "alpha = gray-level\n"
      "loss = log10\n"
      "target = composite\n"
      "self = true\n"
      "[eval]\n"
      "table1_eps = 0, 0.2\n");
  CHECK(c.data.n == 64);
  CHECK(c.network.widths == std::vector<std::size_t>{4, 8, 8});
  CHECK(c.network.dtype == Dtype::f64);
  CHECK(c.train.lambda == 0.5);
  CHECK(c.train.adam.lr == 3e-4);
  CHECK(c.attack.eps == 0.1);
  CHECK(c.attack.alpha_mode == AlphaMode::gray_level);
  CHECK(c.attack.objective == LossKind::LOG10);
  CHECK(c.attack.target == AttackTarget::composite_c);
  CHECK(c.attack.self_target);
  CHECK(c.eval.table1_eps == std::vector<double>{0.0, 0.2});
  NetworkSpec expected = depth_spec(32, 32, {4, 8, 8});
  expected.dtype = Dtype::f64;
  CHECK(c.depth_network() == expected);
  CHECK(c.saliency_training(true).lambda == 0.5);
}

TEST_CASE("unknown keys and sections are hard errors with line numbers") {
  CHECK(config_error("[data]\nseed = 1\nsede = 2\n").find("line 3") != std::string::npos);
  CHECK(config_error("[data]\nsede = 2\n").find("sede") != std::string::npos);
  CHECK(config_error("[model]\n").find("unknown section") != std::string::npos);
  CHECK(config_error("seed = 1\n").find("outside") != std::string::npos);
  CHECK(config_error("[train]\nlr = fast\n").find("line 2") != std::string::npos);
  CHECK(config_error("[network]\ndtype = f16\n").find("dtype") != std::string::npos);
  CHECK(config_error("[attack]\nloss = huber\n").find("line 2") != std::string::npos);
}

TEST_CASE("set overrides use section.key") {
  RunConfig c;
  c.set("train.batch", "4");
  c.set("attack.alpha", "0.02");
  CHECK(c.train.batch == 4);
  CHECK(c.attack.alpha_mode == AlphaMode::explicit_value);
  CHECK(c.attack.alpha() == 0.02);
  CHECK_THROWS_AS(c.set("train.bach", "4"), Error);
  CHECK_THROWS_AS(c.set("batch", "4"), Error);
}

TEST_CASE("to_text round-trips every key") {
  RunConfig c;
  c.set("data.n", "123");
  c.set("network.widths", "4,8,16");
  c.set("train.lambda", "0.25");
  c.set("attack.loss", "ldif");
  c.set("eval.table2_eps", "0,0.3");
  const std::string text = c.to_text();
  const RunConfig back = RunConfig::parse(text);
  CHECK(back.to_text() == text);
  CHECK(back.data.n == 123);
  CHECK(back.train.lambda == 0.25);
  CHECK(RunConfig::parse(RunConfig{}.to_text()).to_text() == RunConfig{}.to_text());
}

TEST_CASE("sparsity weight defaults differ between G and G_adv") {
  const RunConfig c;
  CHECK_FALSE(c.train.lambda.has_value());
  CHECK(c.saliency_training(false).lambda > c.saliency_training(true).lambda);
  CHECK(c.depth_training().lambda == 0.0);
}

TEST_CASE("depth and saliency networks use separate learning rates") {
  RunConfig c;
  c.set("train.lr", "2e-4");
  c.set("train.depth_lr", "5e-3");
  CHECK(c.depth_training().adam.lr == 5e-3);
  CHECK(c.saliency_training(true).adam.lr == 2e-4);
  CHECK(c.saliency_training(false).adam.lr == 2e-4);
}

TEST_CASE("validation rejects inconsistent values") {
  RunConfig c;
  c.set("data.train_fraction", "1.5");
  CHECK_THROWS_AS(c.validate(), Error);
  RunConfig d;
  d.set("data.height", "50");
  CHECK_THROWS_AS(d.validate(), Error);
  RunConfig e;
  e.set("train.eps_lo", "0.5");
  e.set("train.eps_hi", "0.1");
  CHECK_THROWS_AS(e.validate(), Error);
}
