#pragma once

#include <filesystem>
#include <string>

#include "depthguard/tensor.hpp"

namespace depthguard {

/// Min-max range used to map a plane to 8-bit gray.
struct Normalization {
  double min = 0.0;
  double max = 1.0;
};

/// Binary PPM (P6) of a [3,H,W] image in [0,1]; values are clamped.
void write_ppm(const std::filesystem::path& path, const Tensor& image);

/// Binary PGM (P5) of a [1,H,W] plane, min-max normalized to 0..255 (a
/// constant plane maps to 0). Returns the range that was used.
Normalization write_pgm(const std::filesystem::path& path, const Tensor& plane);
/// Same, with a caller-fixed range.
void write_pgm(const std::filesystem::path& path, const Tensor& plane, Normalization range);

}  // namespace depthguard
