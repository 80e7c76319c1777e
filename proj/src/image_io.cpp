#include "depthguard/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "depthguard/serialize.hpp"

namespace depthguard {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::vector<std::uint8_t> header(const char* magic, std::size_t w, std::size_t h) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    fail(ErrorCode::shape_mismatch, "write_ppm: expected [3,H,W], got " + to_string(image.shape()));
  const std::size_t h = image.dim(1), w = image.dim(2);
  const auto v = image.values();
  auto bytes = header("P6", w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) bytes.push_back(to_byte(v[(c * h + y) * w + x]));
  write_file_atomic(path, bytes);
}

void write_pgm(const std::filesystem::path& path, const Tensor& plane, Normalization range) {
  if (plane.ndim() != 3 || plane.dim(0) != 1)
    fail(ErrorCode::shape_mismatch, "write_pgm: expected [1,H,W], got " + to_string(plane.shape()));
  const std::size_t h = plane.dim(1), w = plane.dim(2);
  const double span = range.max - range.min;
  auto bytes = header("P5", w, h);
  for (double v : plane.values()) bytes.push_back(span > 0 ? to_byte((v - range.min) / span) : 0);
  write_file_atomic(path, bytes);
}

Normalization write_pgm(const std::filesystem::path& path, const Tensor& plane) {
  const auto v = plane.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const Normalization range{*lo, *hi};
  write_pgm(path, plane, range);
  return range;
}

}  // namespace depthguard
