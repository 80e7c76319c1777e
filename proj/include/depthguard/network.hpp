#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "depthguard/tensor.hpp"

namespace depthguard {

enum class NetRole : std::uint8_t { depth = 0, saliency = 1 };

/// Which trained model a checkpoint holds.
enum class ModelTag : std::uint8_t { none = 0, N = 1, N_adv = 2, G = 3, G_adv = 4 };

std::string_view to_string(NetRole role) noexcept;
std::string_view to_string(ModelTag tag) noexcept;
ModelTag parse_model_tag(std::string_view text);

/// Toy encoder-decoder layout. The encoder has `encoder_depth` stride-2
/// conv blocks with `widths[i]` output channels; the decoder mirrors it with
/// bilinear-upsample + conv blocks, stopping at half resolution for depth
/// and full resolution for saliency.
struct NetworkSpec {
  NetRole role = NetRole::depth;
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 48;
  std::vector<std::size_t> widths{8, 16, 32};
  std::size_t encoder_depth = 3;
  Dtype dtype = Dtype::f32;

  /// Throws ErrorCode::invalid_argument describing the first violation.
  void validate() const;
  Shape input_shape() const { return {channels, height, width}; }
  Shape output_shape() const;
  /// Stable 64-bit hash of every field that affects parameter layout.
  std::uint64_t hash() const;
  std::string describe() const;

  bool operator==(const NetworkSpec&) const = default;
};

NetworkSpec depth_spec(std::size_t height, std::size_t width, std::vector<std::size_t> widths = {8, 16, 32});
NetworkSpec saliency_spec(std::size_t height, std::size_t width, std::vector<std::size_t> widths = {8, 16, 32});

/// One conv layer of the architecture, in evaluation order.
struct LayerPlan {
  std::string name;
  std::size_t c_in, c_out, kernel, stride;
  bool upsample_before;
};
std::vector<LayerPlan> layer_plan(const NetworkSpec& spec);

/// Ordered, uniquely named parameter tensors of one network plus metadata.
class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(NetworkSpec spec) : spec_(std::move(spec)) {}

  void add(std::string name, Tensor tensor);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::vector<Tensor> tensors() const;

  /// Total scalar count over all tensors.
  std::size_t parameter_count() const;

  /// Views that share data but never accumulate gradients.
  ParameterStore frozen() const;
  ParameterStore deep_copy() const;
  bool bitwise_equal(const ParameterStore& other) const;

  const NetworkSpec& spec() const { return spec_; }
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  ModelTag tag = ModelTag::none;

 private:
  NetworkSpec spec_;
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// He-normal conv weights (std = sqrt(2 / fan_in)), zero biases.
ParameterStore build_network(const NetworkSpec& spec, std::uint64_t seed);

/// x: [3,H,W] in [0,1] -> positive depth [1,H/2,W/2] (softplus + 0.01 m).
Tensor forward_depth(const ParameterStore& params, const Tensor& x);
/// x: [3,H,W] -> saliency [1,H,W] in (0,1).
Tensor forward_saliency(const ParameterStore& params, const Tensor& x);

inline constexpr double kDepthFloor = 0.01;

/// DGW1 checkpoint: "DGW1", u16 version, u64 spec hash, u32 count, then
/// per parameter u16 name length, name, DGT1 tensor; followed by a "DGWM"
/// trailer carrying the model tag, seed, epoch, and the network spec.
std::vector<std::uint8_t> encode_checkpoint(const ParameterStore& params);
ParameterStore decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path);
ParameterStore load_checkpoint(const std::filesystem::path& path);
/// Additionally rejects checkpoints whose spec hash differs from `expected`.
ParameterStore load_checkpoint(const std::filesystem::path& path, const NetworkSpec& expected);

inline constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace depthguard
