#include "depthguard/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "depthguard/parallel.hpp"
#include "depthguard/rng.hpp"
#include "depthguard/serialize.hpp"

namespace depthguard {

namespace {

// Image formation constants. Irradiance from the camera-mounted light falls
// off with the inverse square of distance, so intensity, texture scale,
// object size and contact shadows all carry depth information.
constexpr double kLightReference = 1.5;
constexpr double kWallLo = 0.05, kWallHi = 0.15;
constexpr double kAmbient = 0.25;
constexpr double kTextureGain = 0.08;
constexpr double kTextureFrequency = 1.5;  // cycles per normalized unit per meter
constexpr double kShadowRadius = 2.0;      // pixels
constexpr double kShadowStrength = 0.3;
constexpr double kFocal = 0.8;

std::array<double, 3> tinted(Rng& rng, double lo, double hi) {
  const double g = rng.uniform(lo, hi);
  std::array<double, 3> a{};
  for (auto& c : a) c = g * rng.uniform(0.9, 1.0);
  return a;
}

bool covers(const Box& b, double u, double v) { return u >= b.u0 && u < b.u1 && v >= b.v0 && v < b.v1; }

// Painter's algorithm: index of the visible surface per pixel center, -1
// for the back wall.
std::vector<int> rasterize(const SceneSpec& scene, std::size_t height, std::size_t width) {
  std::vector<std::size_t> order(scene.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scene.boxes[a].depth > scene.boxes[b].depth; });
  std::vector<int> surface(height * width, -1);
  for (auto idx : order) {
    const auto& b = scene.boxes[idx];
    for (std::size_t r = 0; r < height; ++r) {
      const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(height);
      for (std::size_t c = 0; c < width; ++c) {
        const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(width);
        if (covers(b, u, v)) surface[r * width + c] = static_cast<int>(idx);
      }
    }
  }
  return surface;
}

}  // namespace

SceneSpec random_scene(std::uint64_t scene_seed) {
  Rng rng(scene_seed);
  SceneSpec s;
  s.room_depth = rng.uniform(7.0, kMaxSceneDepth);
  s.wall_albedo = tinted(rng, kWallLo, kWallHi);
  const double lx = rng.uniform(-0.3, 0.3), ly = rng.uniform(-0.3, 0.3);
  const double norm = std::sqrt(lx * lx + ly * ly + 1.0);
  s.light_dir = {lx / norm, ly / norm, 1.0 / norm};
  s.texture_noise = rng.uniform(0.005, 0.02);
  s.texture_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const std::size_t n_boxes = 2 + rng.below(5);
  for (std::size_t i = 0; i < n_boxes; ++i) {
    Box b;
    b.depth = rng.uniform(1.0, s.room_depth - 1.0);
    const double size = rng.uniform(0.3, 0.9);
    const double aspect = rng.uniform(0.6, 1.6);
    const double half_u = kFocal * size * std::sqrt(aspect) / b.depth;
    const double half_v = kFocal * size / std::sqrt(aspect) / b.depth;
    const double cu = rng.uniform(), cv = rng.uniform();
    b.u0 = std::max(0.0, cu - half_u);
    b.u1 = std::min(1.0, cu + half_u);
    b.v0 = std::max(0.0, cv - half_v);
    b.v1 = std::min(1.0, cv + half_v);
    b.albedo = tinted(rng, 0.7, 1.0);
    s.boxes.push_back(b);
  }
  return s;
}

SampleRecord render_scene(const SceneSpec& scene, std::size_t height, std::size_t width, std::uint64_t scene_seed) {
  if (height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0)
    fail(ErrorCode::invalid_argument, "synthetic dims must be positive multiples of 16, got " +
                                          std::to_string(height) + "x" + std::to_string(width));
  const std::size_t dh = height / 2, dw = width / 2;

  SampleRecord rec;
  rec.scene_seed = scene_seed;

  const auto depth_surface = rasterize(scene, dh, dw);
  std::vector<double> depth(dh * dw);
  for (std::size_t i = 0; i < depth.size(); ++i)
    depth[i] = depth_surface[i] < 0 ? scene.room_depth : scene.boxes[static_cast<std::size_t>(depth_surface[i])].depth;
  rec.depth = Tensor::from_values({1, dh, dw}, depth);

  const auto surface = rasterize(scene, height, width);
  const double lambert = std::max(0.0, scene.light_dir[2]);
  Rng noise = Rng(scene_seed).split(1);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> image(3 * height * width);
  for (std::size_t r = 0; r < height; ++r) {
    const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(height);
    for (std::size_t c = 0; c < width; ++c) {
      const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(width);
      const int s = surface[r * width + c];
      const double d = s < 0 ? scene.room_depth : scene.boxes[static_cast<std::size_t>(s)].depth;
      const auto& albedo = s < 0 ? scene.wall_albedo : scene.boxes[static_cast<std::size_t>(s)].albedo;

      const double shade = (kAmbient + (1.0 - kAmbient) * lambert) * std::min(1.0, (kLightReference / d) * (kLightReference / d));
      const double f = kTextureFrequency * d;
      const double texture =
          1.0 + kTextureGain * std::sin(two_pi * f * u + scene.texture_phase) * std::sin(two_pi * f * v);

      // Contact shadow cast by nearer boxes onto the surface behind them.
      double shadow = 1.0;
      for (const auto& b : scene.boxes) {
        if (b.depth >= d) continue;
        const double du = std::max({b.u0 - u, 0.0, u - b.u1}) * static_cast<double>(width);
        const double dv = std::max({b.v0 - v, 0.0, v - b.v1}) * static_cast<double>(height);
        const double dist = std::hypot(du, dv);
        if (dist < kShadowRadius) shadow = std::min(shadow, 1.0 - kShadowStrength * (1.0 - dist / kShadowRadius));
      }

      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double jitter = noise.uniform(-scene.texture_noise, scene.texture_noise);
        image[(ch * height + r) * width + c] = std::clamp(albedo[ch] * shade * texture * shadow + jitter, 0.0, 1.0);
      }
    }
  }
  rec.image = Tensor::from_values({3, height, width}, image);
  return rec;
}

Dataset synth_generate(std::uint64_t seed, std::size_t n, std::size_t height, std::size_t width) {
  if (n == 0) fail(ErrorCode::invalid_argument, "synth_generate: n must be >= 1");
  if (height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0)
    fail(ErrorCode::invalid_argument, "synthetic dims must be positive multiples of 16, got " +
                                          std::to_string(height) + "x" + std::to_string(width));
  const Rng root(seed);
  Dataset ds;
  ds.records.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const std::uint64_t scene_seed = root.split(i).bits();
    ds.records[i] = render_scene(random_scene(scene_seed), height, width, scene_seed);
  });
  return ds;
}

// ---------------------------------------------------------------------------
// DGD1

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset) {
  ByteWriter w;
  w.raw(std::string_view("DGD1"));
  w.u32(static_cast<std::uint32_t>(dataset.records.size()));
  for (const auto& rec : dataset.records) {
    ByteWriter body;
    write_tensor(body, rec.image);
    write_tensor(body, rec.depth);
    body.u64(rec.scene_seed);
    w.u32(static_cast<std::uint32_t>(body.bytes().size()));
    w.raw(body.bytes());
    w.u32(crc32_of(body.bytes()));
  }
  w.u32(static_cast<std::uint32_t>(dataset.provenance.size()));
  w.raw(std::string_view(dataset.provenance));
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("DGD1");
  const auto count = r.u32("record count");
  Dataset ds;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.offset();
    const auto length = r.u32("record length");
    auto body = r.raw(length, "record " + std::to_string(i));
    const auto stored_crc = r.u32("record checksum");
    if (crc32_of(body) != stored_crc)
      fail(ErrorCode::format, "record " + std::to_string(i) + " at byte " + std::to_string(start) + " fails its checksum");
    ByteReader br(body);
    SampleRecord rec;
    rec.image = read_tensor(br);
    rec.depth = read_tensor(br);
    rec.scene_seed = br.u64("scene seed");
    if (!br.at_end())
      fail(ErrorCode::format, "record " + std::to_string(i) + " at byte " + std::to_string(start) +
                                  " has " + std::to_string(br.remaining()) + " unframed bytes");
    if (rec.image.ndim() != 3 || rec.depth.ndim() != 3)
      fail(ErrorCode::format, "record " + std::to_string(i) + " tensors must be [C,H,W]");
    ds.records.push_back(std::move(rec));
  }
  if (!r.at_end()) {
    const auto len = r.u32("provenance length");
    auto text = r.raw(len, "provenance");
    ds.provenance.assign(text.begin(), text.end());
  }
  if (!r.at_end()) fail(ErrorCode::format, "trailing bytes after dataset at byte " + std::to_string(r.offset()));
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_file_atomic(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

// ---------------------------------------------------------------------------
// Preprocessing

Tensor resize_bilinear(const Tensor& t, std::size_t height, std::size_t width) {
  if (t.ndim() != 3) fail(ErrorCode::shape_mismatch, "resize: expected [C,H,W], got " + to_string(t.shape()));
  if (height == 0 || width == 0) fail(ErrorCode::invalid_argument, "resize: target extents must be positive");
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (h == height && w == width) return t.clone();
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> tab(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      if (src < 0) src = 0;
      auto i0 = std::min(static_cast<std::size_t>(src), in - 1);
      auto i1 = std::min(i0 + 1, in - 1);
      tab[o] = {i0, i1, src - static_cast<double>(i0)};
    }
    return tab;
  };
  const auto ty = taps(h, height), tx = taps(w, width);
  const auto src = t.values();
  std::vector<double> out(c * height * width);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < height; ++y) {
      const auto [y0, y1, ly] = ty[y];
      for (std::size_t x = 0; x < width; ++x) {
        const auto [x0, x1, lx] = tx[x];
        auto at = [&](std::size_t yy, std::size_t xx) { return src[(ch * h + yy) * w + xx]; };
        out[(ch * height + y) * width + x] = (1 - ly) * ((1 - lx) * at(y0, x0) + lx * at(y0, x1)) +
                                             ly * ((1 - lx) * at(y1, x0) + lx * at(y1, x1));
      }
    }
  return Tensor::from_values({c, height, width}, out, t.dtype());
}

Tensor center_crop(const Tensor& t, std::size_t height, std::size_t width) {
  if (t.ndim() != 3) fail(ErrorCode::shape_mismatch, "crop: expected [C,H,W], got " + to_string(t.shape()));
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (height > h || width > w || height == 0 || width == 0)
    fail(ErrorCode::invalid_argument, "crop " + std::to_string(height) + "x" + std::to_string(width) +
                                          " does not fit in " + to_string(t.shape()));
  const std::size_t oy = (h - height) / 2, ox = (w - width) / 2;
  const auto src = t.values();
  std::vector<double> out(c * height * width);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) out[(ch * height + y) * width + x] = src[(ch * h + y + oy) * w + x + ox];
  return Tensor::from_values({c, height, width}, out, t.dtype());
}

SampleRecord preprocess(const Tensor& image, const Tensor& depth, const PreprocessSpec& spec) {
  if (image.ndim() != 3 || depth.ndim() != 3)
    fail(ErrorCode::shape_mismatch, "preprocess: image and depth must be [C,H,W]");
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (spec.resize_height > h || spec.resize_width > w)
    fail(ErrorCode::invalid_argument, "preprocess: resize target larger than the source image");
  if (spec.crop_height > spec.resize_height || spec.crop_width > spec.resize_width)
    fail(ErrorCode::invalid_argument, "preprocess: crop larger than the resized image");
  if (spec.crop_height % 2 || spec.crop_width % 2)
    fail(ErrorCode::invalid_argument, "preprocess: crop extents must be even");

  SampleRecord rec;
  rec.image = center_crop(resize_bilinear(image, spec.resize_height, spec.resize_width), spec.crop_height,
                          spec.crop_width);

  // Same geometry in the depth map's own resolution.
  const double sy = static_cast<double>(depth.dim(1)) / static_cast<double>(h);
  const double sx = static_cast<double>(depth.dim(2)) / static_cast<double>(w);
  auto scaled = [](std::size_t n, double s) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * s))); };
  Tensor d = resize_bilinear(depth, scaled(spec.resize_height, sy), scaled(spec.resize_width, sx));
  d = center_crop(d, std::min(d.dim(1), scaled(spec.crop_height, sy)), std::min(d.dim(2), scaled(spec.crop_width, sx)));
  rec.depth = resize_bilinear(d, spec.crop_height / 2, spec.crop_width / 2);
  return rec;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::invalid_argument, "split: train fraction must lie strictly between 0 and 1");
  const std::size_t n = dataset.records.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  std::pair<Dataset, Dataset> out;
  out.first.provenance = out.second.provenance = dataset.provenance;
  for (auto i : train) out.first.records.push_back(dataset.records[i]);
  for (auto i : test) out.second.records.push_back(dataset.records[i]);
  return out;
}

}  // namespace depthguard
