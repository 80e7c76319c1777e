#include "depthguard/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "depthguard/serialize.hpp"

namespace depthguard {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view v, std::string_view key) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    fail(ErrorCode::config, "invalid value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

std::string format_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

template <typename T>
std::vector<T> parse_list(std::string_view v, std::string_view key) {
  std::vector<T> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_number<T>(trim(v.substr(0, comma)), key));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) fail(ErrorCode::config, "empty list for " + std::string(key));
  return out;
}

template <typename T>
std::string format_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) s += format_double(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail(ErrorCode::config, "invalid boolean '" + std::string(v) + "' for " + std::string(key));
}

struct Entry {
  const char* key;
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

#define DG_SIZE(name, field) \
  Entry{name, [&c](std::string_view v) { c.field = parse_number<std::size_t>(v, name); }, [&c] { return std::to_string(c.field); }}
#define DG_U64(name, field) \
  Entry{name, [&c](std::string_view v) { c.field = parse_number<std::uint64_t>(v, name); }, [&c] { return std::to_string(c.field); }}
#define DG_REAL(name, field) \
  Entry{name, [&c](std::string_view v) { c.field = parse_number<double>(v, name); }, [&c] { return format_double(c.field); }}

std::vector<Entry> entries(RunConfig& c) {
  return {
      DG_U64("data.seed", data.seed),
      DG_SIZE("data.n", data.n),
      DG_SIZE("data.height", data.height),
      DG_SIZE("data.width", data.width),
      DG_REAL("data.train_fraction", data.train_fraction),
      DG_U64("data.split_seed", data.split_seed),
      Entry{"network.widths", [&c](std::string_view v) { c.network.widths = parse_list<std::size_t>(v, "network.widths"); },
            [&c] { return format_list(c.network.widths); }},
      Entry{"network.dtype",
            [&c](std::string_view v) {
              if (v == "f32") c.network.dtype = Dtype::f32;
              else if (v == "f64") c.network.dtype = Dtype::f64;
              else fail(ErrorCode::config, "network.dtype must be f32 or f64, got '" + std::string(v) + "'");
            },
            [&c] { return std::string(to_string(c.network.dtype)); }},
      DG_SIZE("train.depth_epochs", train.depth_epochs),
      DG_SIZE("train.saliency_epochs", train.saliency_epochs),
      DG_SIZE("train.iters_per_epoch", train.iters_per_epoch),
      Entry{"train.lambda",
            [&c](std::string_view v) {
              if (v == "default") c.train.lambda.reset();
              else c.train.lambda = parse_number<double>(v, "train.lambda");
            },
            [&c] { return c.train.lambda ? format_double(*c.train.lambda) : std::string("default"); }},
      DG_REAL("train.lr", train.adam.lr),
      DG_REAL("train.depth_lr", train.depth_lr),
      DG_REAL("train.beta1", train.adam.beta1),
      DG_REAL("train.beta2", train.adam.beta2),
      DG_REAL("train.adam_eps", train.adam.eps),
      DG_REAL("train.weight_decay", train.adam.weight_decay),
      DG_REAL("train.adv_prob", train.adv_prob),
      DG_REAL("train.eps_lo", train.eps_lo),
      DG_REAL("train.eps_hi", train.eps_hi),
      DG_REAL("train.iter_lo", train.iter_lo),
      DG_REAL("train.iter_hi", train.iter_hi),
      DG_SIZE("train.batch", train.batch),
      DG_U64("train.seed", train.seed),
      DG_REAL("attack.eps", attack.eps),
      DG_SIZE("attack.iters", attack.iters),
      Entry{"attack.alpha",
            [&c](std::string_view v) {
              if (v == "eps-split") c.attack.alpha_mode = AlphaMode::eps_split;
              else if (v == "gray-level") c.attack.alpha_mode = AlphaMode::gray_level;
              else {
                c.attack.alpha_mode = AlphaMode::explicit_value;
                c.attack.alpha_value = parse_number<double>(v, "attack.alpha");
              }
            },
            [&c] {
              switch (c.attack.alpha_mode) {
                case AlphaMode::eps_split: return std::string("eps-split");
                case AlphaMode::gray_level: return std::string("gray-level");
                case AlphaMode::explicit_value: return format_double(c.attack.alpha_value);
              }
              return std::string("eps-split");
            }},
      Entry{"attack.loss",
            [&c](std::string_view v) {
              try {
                c.attack.objective = parse_loss_kind(v);
              } catch (const Error& e) {
                fail(ErrorCode::config, e.what());
              }
            },
            [&c] { return std::string(to_string(c.attack.objective)); }},
      Entry{"attack.target",
            [&c](std::string_view v) {
              if (v == "plain") c.attack.target = AttackTarget::plain_n;
              else if (v == "composite") c.attack.target = AttackTarget::composite_c;
              else fail(ErrorCode::config, "attack.target must be plain or composite, got '" + std::string(v) + "'");
            },
            [&c] { return std::string(c.attack.target == AttackTarget::composite_c ? "composite" : "plain"); }},
      Entry{"attack.self", [&c](std::string_view v) { c.attack.self_target = parse_bool(v, "attack.self"); },
            [&c] { return std::string(c.attack.self_target ? "true" : "false"); }},
      DG_U64("attack.seed", attack.seed),
      Entry{"eval.table1_eps", [&c](std::string_view v) { c.eval.table1_eps = parse_list<double>(v, "eval.table1_eps"); },
            [&c] { return format_list(c.eval.table1_eps); }},
      Entry{"eval.table2_eps", [&c](std::string_view v) { c.eval.table2_eps = parse_list<double>(v, "eval.table2_eps"); },
            [&c] { return format_list(c.eval.table2_eps); }},
      DG_SIZE("eval.iters", eval.iters),
  };
}

#undef DG_SIZE
#undef DG_U64
#undef DG_REAL

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  for (auto& e : entries(*this))
    if (key == e.key) return e.set(trim(value));
  fail(ErrorCode::config, "unknown key '" + std::string(key) + "'");
}

RunConfig RunConfig::parse(std::string_view text) {
  static const std::vector<std::string_view> sections{"data", "network", "train", "attack", "eval"};
  RunConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::config, where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (std::find(sections.begin(), sections.end(), section) == sections.end())
        fail(ErrorCode::config, where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::config, where + "expected key = value");
    if (section.empty()) fail(ErrorCode::config, where + "key outside of any section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::config, where + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string RunConfig::to_text() const {
  auto& self = const_cast<RunConfig&>(*this);
  std::string out, section;
  for (const auto& e : entries(self)) {
    const std::string_view key = e.key;
    const auto dot = key.find('.');
    const std::string sec(key.substr(0, dot));
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += std::string(key.substr(dot + 1)) + " = " + e.get() + "\n";
  }
  return out;
}

NetworkSpec RunConfig::depth_network() const {
  NetworkSpec s = depth_spec(data.height, data.width, network.widths);
  s.dtype = network.dtype;
  return s;
}

NetworkSpec RunConfig::saliency_network() const {
  NetworkSpec s = saliency_spec(data.height, data.width, network.widths);
  s.dtype = network.dtype;
  return s;
}

namespace {

TrainConfig base_training(const TrainSection& t) {
  TrainConfig c;
  c.iters_per_epoch = t.iters_per_epoch;
  c.adam = t.adam;
  c.adv_prob = t.adv_prob;
  c.eps_range = {t.eps_lo, t.eps_hi};
  c.iter_range = {t.iter_lo, t.iter_hi};
  c.batch = t.batch;
  c.seed = t.seed;
  return c;
}

}  // namespace

TrainConfig RunConfig::depth_training() const {
  TrainConfig c = base_training(train);
  c.epochs = train.depth_epochs;
  c.adam.lr = train.depth_lr;
  c.lambda = 0.0;
  return c;
}

TrainConfig RunConfig::saliency_training(bool adversarial) const {
  TrainConfig c = base_training(train);
  c.epochs = train.saliency_epochs;
  c.lambda = train.lambda.value_or(adversarial ? 0.2 : 1.0);
  return c;
}

void RunConfig::validate() const {
  if (data.n < 1) fail(ErrorCode::config, "data.n must be >= 1");
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0))
    fail(ErrorCode::config, "data.train_fraction must lie in (0,1)");
  try {
    depth_network().validate();
    saliency_network().validate();
    depth_training().validate();
    saliency_training(true).validate();
    attack.validate();
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  for (double e : eval.table1_eps)
    if (!(e >= 0.0 && e <= 1.0)) fail(ErrorCode::config, "eval.table1_eps entries must lie in [0,1]");
  for (double e : eval.table2_eps)
    if (!(e >= 0.0 && e <= 1.0)) fail(ErrorCode::config, "eval.table2_eps entries must lie in [0,1]");
  if (eval.iters < 1) fail(ErrorCode::config, "eval.iters must be >= 1");
}

}  // namespace depthguard
