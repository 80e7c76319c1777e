#include "depthguard/network.hpp"

#include <cmath>
#include <sstream>

#include "depthguard/ops.hpp"
#include "depthguard/rng.hpp"
#include "depthguard/serialize.hpp"

namespace depthguard {

std::string_view to_string(NetRole role) noexcept { return role == NetRole::depth ? "depth" : "saliency"; }

std::string_view to_string(ModelTag tag) noexcept {
  switch (tag) {
    case ModelTag::none: return "none";
    case ModelTag::N: return "N";
    case ModelTag::N_adv: return "N_adv";
    case ModelTag::G: return "G";
    case ModelTag::G_adv: return "G_adv";
  }
  return "none";
}

ModelTag parse_model_tag(std::string_view text) {
  for (auto tag : {ModelTag::none, ModelTag::N, ModelTag::N_adv, ModelTag::G, ModelTag::G_adv})
    if (to_string(tag) == text) return tag;
  fail(ErrorCode::invalid_argument, "unknown model tag '" + std::string(text) + "'");
}

void NetworkSpec::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::invalid_argument, "network spec: " + what); };
  if (channels == 0) bad("channels must be positive");
  if (height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0)
    bad("H and W must be positive multiples of 16, got " + std::to_string(height) + "x" + std::to_string(width));
  if (encoder_depth < 1 || encoder_depth > 4) bad("encoder depth must be in [1,4]");
  if (widths.size() != encoder_depth)
    bad("expected " + std::to_string(encoder_depth) + " channel widths, got " + std::to_string(widths.size()));
  for (auto w : widths)
    if (w == 0) bad("channel widths must be positive");
}

Shape NetworkSpec::output_shape() const {
  if (role == NetRole::depth) return {1, height / 2, width / 2};
  return {1, height, width};
}

std::string NetworkSpec::describe() const {
  std::ostringstream os;
  os << "role=" << to_string(role) << ";c=" << channels << ";h=" << height << ";w=" << width << ";widths=";
  for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << widths[i];
  os << ";depth=" << encoder_depth << ";dtype=" << to_string(dtype);
  return os.str();
}

std::uint64_t NetworkSpec::hash() const { return fnv1a64(describe()); }

NetworkSpec depth_spec(std::size_t height, std::size_t width, std::vector<std::size_t> widths) {
  NetworkSpec s;
  s.role = NetRole::depth;
  s.height = height;
  s.width = width;
  s.encoder_depth = widths.size();
  s.widths = std::move(widths);
  return s;
}

NetworkSpec saliency_spec(std::size_t height, std::size_t width, std::vector<std::size_t> widths) {
  NetworkSpec s = depth_spec(height, width, std::move(widths));
  s.role = NetRole::saliency;
  return s;
}

std::vector<LayerPlan> layer_plan(const NetworkSpec& spec) {
  spec.validate();
  std::vector<LayerPlan> plan;
  std::size_t c = spec.channels;
  const std::size_t depth = spec.encoder_depth;
  for (std::size_t i = 0; i < depth; ++i) {
    plan.push_back({"enc" + std::to_string(i), c, spec.widths[i], 3, 2, false});
    c = spec.widths[i];
  }
  const std::size_t ups = spec.role == NetRole::depth ? depth - 1 : depth;
  for (std::size_t j = 0; j < ups; ++j) {
    const std::size_t target = depth >= j + 2 ? spec.widths[depth - 2 - j] : spec.widths[0];
    plan.push_back({"dec" + std::to_string(j), c, target, 3, 1, true});
    c = target;
  }
  plan.push_back({"head", c, 1, 3, 1, false});
  return plan;
}

void ParameterStore::add(std::string name, Tensor tensor) {
  if (contains(name)) fail(ErrorCode::invalid_argument, "duplicate parameter name '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor& ParameterStore::get(std::string_view name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  fail(ErrorCode::invalid_argument, "no parameter named '" + std::string(name) + "'");
}

bool ParameterStore::contains(std::string_view name) const {
  for (const auto& entry : entries_)
    if (entry.first == name) return true;
  return false;
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& entry : entries_) out.push_back(entry.second);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& entry : entries_) n += entry.second.numel();
  return n;
}

ParameterStore ParameterStore::frozen() const {
  ParameterStore out(spec_);
  out.seed = seed;
  out.epoch = epoch;
  out.tag = tag;
  for (const auto& [n, t] : entries_) out.add(n, t.detach());
  return out;
}

ParameterStore ParameterStore::deep_copy() const {
  ParameterStore out(spec_);
  out.seed = seed;
  out.epoch = epoch;
  out.tag = tag;
  for (const auto& [n, t] : entries_) {
    Tensor c = t.clone();
    c.set_requires_grad(t.is_leaf() && t.requires_grad());
    out.add(n, c);
  }
  return out;
}

bool ParameterStore::bitwise_equal(const ParameterStore& other) const {
  if (spec_ != other.spec_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first) return false;
    if (!entries_[i].second.bitwise_equal(other.entries_[i].second)) return false;
  }
  return true;
}

ParameterStore build_network(const NetworkSpec& spec, std::uint64_t seed) {
  const auto plan = layer_plan(spec);
  ParameterStore store(spec);
  store.seed = seed;
  Rng rng(seed);
  for (const auto& layer : plan) {
    const std::size_t fan_in = layer.c_in * layer.kernel * layer.kernel;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<double> w(layer.c_out * fan_in);
    for (auto& v : w) v = rng.normal() * stddev;
    Tensor weight = Tensor::from_values({layer.c_out, layer.c_in, layer.kernel, layer.kernel}, w, spec.dtype);
    Tensor bias = Tensor::zeros({layer.c_out}, spec.dtype);
    weight.set_requires_grad(true);
    bias.set_requires_grad(true);
    store.add(layer.name + ".weight", weight);
    store.add(layer.name + ".bias", bias);
  }
  return store;
}

namespace {

Tensor trunk(const ParameterStore& params, const Tensor& x, NetRole expected) {
  const auto& spec = params.spec();
  if (spec.role != expected)
    fail(ErrorCode::invalid_argument, "parameter store holds a " + std::string(to_string(spec.role)) +
                                          " network, expected " + std::string(to_string(expected)));
  if (x.shape() != spec.input_shape())
    fail(ErrorCode::shape_mismatch,
         "network input must be " + to_string(spec.input_shape()) + ", got " + to_string(x.shape()));
  Tensor h = x;
  for (const auto& layer : layer_plan(spec)) {
    if (layer.upsample_before) h = bilinear_upsample2x(h);
    h = conv2d(h, params.get(layer.name + ".weight"), params.get(layer.name + ".bias"), layer.stride,
               layer.kernel / 2);
    if (layer.name != "head") h = relu(h);
  }
  return h;
}

}  // namespace

Tensor forward_depth(const ParameterStore& params, const Tensor& x) {
  return add_scalar(softplus(trunk(params, x, NetRole::depth)), kDepthFloor);
}

Tensor forward_saliency(const ParameterStore& params, const Tensor& x) {
  return sigmoid(trunk(params, x, NetRole::saliency));
}

// ---------------------------------------------------------------------------
// Checkpoints

std::vector<std::uint8_t> encode_checkpoint(const ParameterStore& params) {
  const auto& spec = params.spec();
  ByteWriter w;
  w.raw(std::string_view("DGW1"));
  w.u16(kCheckpointVersion);
  w.u64(spec.hash());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(std::string_view(name));
    write_tensor(w, tensor);
  }
  w.raw(std::string_view("DGWM"));
  w.u8(static_cast<std::uint8_t>(params.tag));
  w.u64(params.seed);
  w.u32(params.epoch);
  w.u8(static_cast<std::uint8_t>(spec.role));
  w.u32(static_cast<std::uint32_t>(spec.channels));
  w.u32(static_cast<std::uint32_t>(spec.height));
  w.u32(static_cast<std::uint32_t>(spec.width));
  w.u32(static_cast<std::uint32_t>(spec.encoder_depth));
  w.u8(static_cast<std::uint8_t>(spec.widths.size()));
  for (auto width : spec.widths) w.u32(static_cast<std::uint32_t>(width));
  w.u8(static_cast<std::uint8_t>(spec.dtype));
  return w.take();
}

ParameterStore decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("DGW1");
  const auto version = r.u16("checkpoint version");
  if (version != kCheckpointVersion)
    fail(ErrorCode::format, "unsupported checkpoint version " + std::to_string(version));
  const auto stored_hash = r.u64("spec hash");
  const auto count = r.u32("parameter count");
  std::vector<std::pair<std::string, Tensor>> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.u16("parameter name length");
    auto name_bytes = r.raw(len, "parameter name");
    entries.emplace_back(std::string(name_bytes.begin(), name_bytes.end()), read_tensor(r));
  }
  r.expect_magic("DGWM");
  const auto tag = r.u8("model tag");
  if (tag > static_cast<std::uint8_t>(ModelTag::G_adv)) fail(ErrorCode::format, "unknown model tag " + std::to_string(tag));
  NetworkSpec spec;
  const auto seed = r.u64("seed");
  const auto epoch = r.u32("epoch");
  const auto role = r.u8("network role");
  if (role > 1) fail(ErrorCode::format, "unknown network role " + std::to_string(role));
  spec.role = static_cast<NetRole>(role);
  spec.channels = r.u32("channels");
  spec.height = r.u32("height");
  spec.width = r.u32("width");
  spec.encoder_depth = r.u32("encoder depth");
  spec.widths.resize(r.u8("width count"));
  for (auto& width : spec.widths) width = r.u32("channel width");
  const auto dtype = r.u8("dtype");
  if (dtype > 1) fail(ErrorCode::format, "unknown dtype code " + std::to_string(dtype));
  spec.dtype = static_cast<Dtype>(dtype);
  if (!r.at_end()) fail(ErrorCode::format, "trailing bytes after checkpoint at byte " + std::to_string(r.offset()));
  if (spec.hash() != stored_hash)
    fail(ErrorCode::format, "checkpoint spec hash mismatch (header " + std::to_string(stored_hash) + ", spec " +
                                std::to_string(spec.hash()) + ")");

  ParameterStore store(spec);
  store.seed = seed;
  store.epoch = epoch;
  store.tag = static_cast<ModelTag>(tag);
  const auto reference = build_network(spec, 0);
  if (reference.size() != entries.size())
    fail(ErrorCode::format, "checkpoint has " + std::to_string(entries.size()) + " parameters, spec expects " +
                                std::to_string(reference.size()));
  auto ref = reference.begin();
  for (auto& [name, tensor] : entries) {
    if (name != ref->first || tensor.shape() != ref->second.shape() || tensor.dtype() != spec.dtype)
      fail(ErrorCode::format, "parameter '" + name + "' does not match the network layout");
    tensor.set_requires_grad(true);
    store.add(name, tensor);
    ++ref;
  }
  return store;
}

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(params));
}

ParameterStore load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

ParameterStore load_checkpoint(const std::filesystem::path& path, const NetworkSpec& expected) {
  auto store = load_checkpoint(path);
  if (store.spec().hash() != expected.hash())
    fail(ErrorCode::format, "checkpoint " + path.string() + " was built for spec '" + store.spec().describe() +
                                "', expected '" + expected.describe() + "'");
  return store;
}

}  // namespace depthguard
