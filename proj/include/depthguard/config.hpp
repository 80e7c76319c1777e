#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "depthguard/attack.hpp"
#include "depthguard/defense.hpp"
#include "depthguard/network.hpp"

namespace depthguard {

struct DataSection {
  std::uint64_t seed = 1;
  std::size_t n = 2000;
  std::size_t height = 64;
  std::size_t width = 48;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 2;
};

struct NetworkSection {
  std::vector<std::size_t> widths{8, 16, 32};
  Dtype dtype = Dtype::f32;
};

struct TrainSection {
  std::size_t depth_epochs = 20;
  std::size_t saliency_epochs = 20;
  std::size_t iters_per_epoch = 0;
  /// Sparsity weight; unset means 1 for G and 0.2 for G_adv.
  std::optional<double> lambda;
  /// `adam.lr` drives G and G_adv; N and N_adv use `depth_lr`.
  AdamOptions adam{};
  double depth_lr = 1e-3;
  double adv_prob = 0.5;
  double eps_lo = 0.01, eps_hi = 0.3;
  double iter_lo = 1.0, iter_hi = 10.0;
  std::size_t batch = 1;
  std::uint64_t seed = 3;
};

struct EvalSection {
  std::vector<double> table1_eps{0.0, 0.05, 0.1};
  std::vector<double> table2_eps{0.0, 0.05, 0.1, 0.15, 0.2};
  std::size_t iters = 10;
};

/// INI-style run configuration with sections [data], [network], [train],
/// [attack] and [eval]. Unknown sections or keys are errors.
struct RunConfig {
  DataSection data;
  NetworkSection network;
  TrainSection train;
  AttackConfig attack;
  EvalSection eval;

  /// Throws ErrorCode::config naming the line for any malformed entry.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  /// `key` is "section.name"; same validation as the file parser.
  void set(std::string_view key, std::string_view value);
  /// Every key with its resolved value, in a fixed order.
  std::string to_text() const;

  NetworkSpec depth_network() const;
  NetworkSpec saliency_network() const;
  TrainConfig depth_training() const;
  /// `adversarial` selects the G_adv defaults (lambda 0.2 vs 1).
  TrainConfig saliency_training(bool adversarial) const;

  void validate() const;
};

}  // namespace depthguard
