#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "depthguard/tensor.hpp"

namespace depthguard {

/// One RGB image in [0,1] with its depth map (meters) at half resolution.
struct SampleRecord {
  Tensor image;  // [3,H,W]
  Tensor depth;  // [1,H/2,W/2]
  std::uint64_t scene_seed = 0;
};

struct Dataset {
  std::vector<SampleRecord> records;
  /// Free-form key=value text; attacks record their configuration here.
  std::string provenance;

  std::size_t size() const { return records.size(); }
};

/// Fronto-parallel rectangle in normalized image coordinates: u spans
/// columns, v spans rows, both in [0,1]. A point (u,v) is covered when
/// u0 <= u < u1 and v0 <= v < v1.
struct Box {
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  double depth = 1.0;
  std::array<double, 3> albedo{1, 1, 1};
};

struct SceneSpec {
  double room_depth = 8.0;
  std::array<double, 3> wall_albedo{0.8, 0.8, 0.8};
  std::vector<Box> boxes;
  /// Unit vector from the surface toward the light.
  std::array<double, 3> light_dir{0, 0, 1};
  double texture_noise = 0.01;
  double texture_phase = 0.0;
};

inline constexpr double kMinSceneDepth = 0.5;
inline constexpr double kMaxSceneDepth = 10.0;

/// Draws a random indoor-like scene: back wall at 7-10 m, 2-6 boxes.
SceneSpec random_scene(std::uint64_t scene_seed);

/// Renders the image at H x W and the analytic depth at H/2 x W/2.
SampleRecord render_scene(const SceneSpec& scene, std::size_t height, std::size_t width, std::uint64_t scene_seed);

/// n scenes with per-record seeds split from `seed`.
Dataset synth_generate(std::uint64_t seed, std::size_t n, std::size_t height, std::size_t width);

/// DGD1: "DGD1", u32 count, per record {u32 body length, DGT1 image, DGT1
/// depth, u64 scene seed, u32 CRC-32 of the body}, then u32 provenance
/// length and provenance bytes.
std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

/// Bilinear resize of a [C,H,W] tensor, half-pixel centers.
Tensor resize_bilinear(const Tensor& t, std::size_t height, std::size_t width);
/// Central crop; the offset is floor((H - h) / 2).
Tensor center_crop(const Tensor& t, std::size_t height, std::size_t width);

struct PreprocessSpec {
  std::size_t resize_height = 0, resize_width = 0;
  std::size_t crop_height = 0, crop_width = 0;
};

/// Resize then center-crop the image; the depth map goes through the same
/// geometry at its own resolution and ends at half the crop size.
SampleRecord preprocess(const Tensor& image, const Tensor& depth, const PreprocessSpec& spec);

/// Seeded disjoint split; both halves keep the original record order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace depthguard
