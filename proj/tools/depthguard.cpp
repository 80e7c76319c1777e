// depthguard: batch front end for data generation, training, attacks,
// defended evaluation and image dumps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "depthguard/attack.hpp"
#include "depthguard/config.hpp"
#include "depthguard/data.hpp"
#include "depthguard/defense.hpp"
#include "depthguard/image_io.hpp"
#include "depthguard/losses.hpp"
#include "depthguard/network.hpp"
#include "depthguard/parallel.hpp"
#include "depthguard/pipeline.hpp"
#include "depthguard/serialize.hpp"

namespace fs = std::filesystem;
using namespace depthguard;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "INI run configuration");
  cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set train.lr=3e-4")->take_all();
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::config, "--set expects section.key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void echo_config(const RunConfig& cfg, const fs::path& out) {
  write_text_atomic(fs::path(out.string() + ".config.ini"), cfg.to_text());
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const std::size_t h = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const std::size_t w = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument(text);
    return {h, w};
  } catch (const std::logic_error&) {
    fail(ErrorCode::invalid_argument, "--dims expects HxW, got '" + text + "'");
  }
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) fail(ErrorCode::invalid_argument, std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) fail(ErrorCode::io, std::string(flag) + ": no such file '" + path + "'");
}

std::optional<ParameterStore> maybe_checkpoint(const std::string& path, const char* flag) {
  if (path.empty()) return std::nullopt;
  require_file(path, flag);
  return load_checkpoint(path);
}

// Removes a partially written artifact unless dismissed.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path path) : path_(std::move(path)) {}
  ~OutputGuard() {
    if (armed_) {
      std::error_code ec;
      fs::remove(path_, ec);
      fs::remove(fs::path(path_.string() + ".partial"), ec);
    }
  }
  void commit() { armed_ = false; }

 private:
  fs::path path_;
  bool armed_ = true;
};

int run_synth(std::uint64_t seed, std::size_t n, const std::string& dims, const std::string& out, const Common& c) {
  RunConfig cfg = resolve(c);
  const auto [h, w] = parse_dims(dims);
  cfg.data.seed = seed;
  cfg.data.n = n;
  cfg.data.height = h;
  cfg.data.width = w;
  if (n < 1) fail(ErrorCode::invalid_argument, "--n must be >= 1");
  depth_spec(h, w, cfg.network.widths).validate();
  OutputGuard guard(out);
  save_dataset(out, synth_generate(seed, n, h, w));
  echo_config(cfg, out);
  guard.commit();
  return 0;
}

int run_train(const std::string& kind, const std::string& data, const std::string& out, const std::string& frozen_n,
              const std::string& log_path, const Common& c) {
  RunConfig cfg = resolve(c);
  cfg.validate();
  require_file(data, "--data");
  const bool saliency = kind == "saliency" || kind == "saliency-adv";
  if (saliency) require_file(frozen_n, "--frozen-n");
  const Dataset train = load_dataset(data);
  if (train.size() == 0) fail(ErrorCode::invalid_argument, "--data holds no records");
  const Shape image = train.records.front().image.shape();
  cfg.data.height = image[1];
  cfg.data.width = image[2];

  OutputGuard guard(out);
  TrainResult result;
  if (kind == "depth") {
    result = train_depth(cfg.depth_network(), train, cfg.depth_training());
  } else if (kind == "depth-adv") {
    result = train_depth_adv(cfg.depth_network(), train, cfg.depth_training());
  } else {
    const ParameterStore n = load_checkpoint(frozen_n, cfg.depth_network());
    result = kind == "saliency" ? train_saliency_clean(n, cfg.saliency_network(), train, cfg.saliency_training(false))
                                : train_saliency_adv(n, cfg.saliency_network(), train, cfg.saliency_training(true));
  }
  save_checkpoint(result.params, out);
  echo_config(cfg, out);
  if (!log_path.empty()) write_text_atomic(log_path, training_log_csv(result));
  guard.commit();
  return 0;
}

struct AttackArgs {
  std::string n, g, data, out, target = "plain", alpha = "eps-split", loss = "l1";
  double eps = 0.05;
  std::size_t iters = 10;
  bool self = false;
};

int run_attack(const AttackArgs& a, const Common& c) {
  RunConfig cfg = resolve(c);
  cfg.attack.eps = a.eps;
  cfg.attack.iters = a.iters;
  cfg.set("attack.alpha", a.alpha);
  cfg.set("attack.loss", a.loss);
  cfg.set("attack.target", a.target);
  cfg.attack.self_target = a.self;
  cfg.attack.validate();
  require_file(a.n, "--n");
  require_file(a.data, "--data");
  const ParameterStore n = load_checkpoint(a.n);
  const std::optional<ParameterStore> g = maybe_checkpoint(a.g, "--g");
  if (cfg.attack.target == AttackTarget::composite_c && !g)
    fail(ErrorCode::missing_checkpoint, "--target composite requires --g");
  const Dataset clean = load_dataset(a.data);
  OutputGuard guard(a.out);
  save_dataset(a.out, generate_adversarial(n, clean, cfg.attack, g ? &*g : nullptr));
  echo_config(cfg, a.out);
  guard.commit();
  return 0;
}

struct EvalArgs {
  std::string config_id, n, n_adv, g, g_adv, data, adv_data, out, loss_out;
};

std::string loss_row(const ConfigurationId id, const PanelFn& panel, const Dataset& clean) {
  std::vector<std::array<double, 5>> rows(clean.size());
  parallel_for(clean.size(), [&](std::size_t i) {
    const PanelOutput o = panel(i);
    const LossBreakdown b = l_dif(o.depth, clean.records[i].depth);
    rows[i] = {b.l_depth.item(), b.l_grad.item(), b.l_normal.item(), b.total.item(),
               o.mask ? sparsity(*o.mask).item() : 0.0};
  });
  std::array<double, 5> m{};
  for (const auto& r : rows)
    for (std::size_t k = 0; k < 5; ++k) m[k] += r[k] / static_cast<double>(rows.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", std::string(to_string(id)).c_str(), m[0], m[1],
                m[2], m[3], m[4]);
  return buf;
}

void append_row(const fs::path& path, const std::string& header, const std::string& row) {
  std::string text;
  if (fs::exists(path)) {
    const auto bytes = read_file(path);
    text.assign(bytes.begin(), bytes.end());
    if (text.rfind(header + "\n", 0) != 0)
      fail(ErrorCode::format, "'" + path.string() + "' exists with a different header");
  } else {
    text = header + "\n";
  }
  write_text_atomic(path, text + row);
}

int run_eval(const EvalArgs& a, const Common& c) {
  RunConfig cfg = resolve(c);
  const ConfigurationId id = parse_configuration(a.config_id);
  require_file(a.data, "--data");
  if (a.out.empty()) fail(ErrorCode::invalid_argument, "--out is required");
  ModelSet models;
  models.n = maybe_checkpoint(a.n, "--n");
  models.n_adv = maybe_checkpoint(a.n_adv, "--n-adv");
  models.g = maybe_checkpoint(a.g, "--g");
  models.g_adv = maybe_checkpoint(a.g_adv, "--g-adv");
  const Dataset clean = load_dataset(a.data);
  configuration_dataflow(id, models, clean, clean);  // reports missing models first
  Dataset adversarial;
  AttackConfig attack = cfg.attack;
  if (!a.adv_data.empty()) {
    require_file(a.adv_data, "--adv-data");
    adversarial = load_dataset(a.adv_data);
    attack = parse_provenance(adversarial.provenance);
  } else if (id == ConfigurationId::B) {
    adversarial = clean;
  } else {
    fail(ErrorCode::invalid_argument, "configuration " + a.config_id + " requires --adv-data");
  }
  const EvalReport report = evaluate_configuration(id, models, clean, adversarial, attack);
  append_row(a.out, kReportCsvHeader, csv_row(report) + "\n");
  if (!a.loss_out.empty())
    append_row(a.loss_out, "config,l_depth,l_grad,l_normal,total,sparsity",
               loss_row(id, configuration_dataflow(id, models, clean, adversarial), clean));
  echo_config(cfg, a.out);
  return 0;
}

struct DumpArgs {
  std::string what, in, adv, n, g, out;
  std::size_t count = 4;
};

int run_dump(const DumpArgs& a) {
  require_file(a.in, "--in");
  if (a.out.empty()) fail(ErrorCode::invalid_argument, "--out is required");
  const Dataset data = load_dataset(a.in);
  const std::size_t count = std::min(a.count, data.size());
  std::optional<ParameterStore> n, g;
  std::optional<Dataset> adv;
  if (a.what == "depth") {
    n = maybe_checkpoint(a.n, "--n");
  } else if (a.what == "saliency") {
    require_file(a.g, "--g");
    g = load_checkpoint(a.g);
  } else if (a.what == "diff") {
    require_file(a.adv, "--adv");
    adv = load_dataset(a.adv);
    if (adv->size() < count) fail(ErrorCode::invalid_argument, "--adv holds fewer records than requested");
  } else {
    fail(ErrorCode::invalid_argument, "--what must be depth, saliency or diff");
  }
  fs::create_directories(a.out);
  const fs::path dir = a.out;
  // Every PGM is min-max normalized; the sidecar records the range used so
  // gray levels map back to physical values: v = min + g / 255 * (max - min).
  std::string sidecar = "# file min max\n";
  const auto pgm = [&](const std::string& name, const Tensor& plane, std::optional<Normalization> fixed = {}) {
    Normalization range = fixed ? *fixed : Normalization{};
    if (fixed) write_pgm(dir / name, plane, range);
    else range = write_pgm(dir / name, plane);
    char buf[64];
    std::snprintf(buf, sizeof buf, " %.9g %.9g\n", range.min, range.max);
    sidecar += name + buf;
    return range;
  };
  for (std::size_t i = 0; i < count; ++i) {
    const SampleRecord& r = data.records[i];
    const std::string stem = "sample" + std::to_string(i);
    write_ppm(dir / (stem + "_image.ppm"), r.image);
    if (a.what == "depth") {
      const Normalization range = pgm(stem + "_depth_gt.pgm", r.depth);
      if (n) pgm(stem + "_depth_pred.pgm", forward_depth(n->frozen(), r.image), range);
    } else if (a.what == "saliency") {
      const Tensor mask = forward_saliency(g->frozen(), r.image);
      pgm(stem + "_saliency.pgm", mask, Normalization{0.0, 1.0});
      write_ppm(dir / (stem + "_masked.ppm"), apply_mask(r.image, mask));
    } else {
      const Tensor& xs = adv->records[i].image;
      write_ppm(dir / (stem + "_adversarial.ppm"), xs);
      const auto cv = r.image.values();
      const auto av = xs.values();
      const std::size_t plane = cv.size() / 3;
      std::vector<double> diff(plane, 0.0);
      for (std::size_t k = 0; k < cv.size(); ++k) diff[k % plane] = std::max(diff[k % plane], std::abs(av[k] - cv[k]));
      pgm(stem + "_diff.pgm",
          Tensor::from_values({1, r.image.dim(1), r.image.dim(2)}, std::span<const double>(diff), Dtype::f64));
    }
  }
  write_text_atomic(dir / "normalization.txt", sidecar);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthguard: adversarial attacks and saliency-mask defense for toy depth networks"};
  app.require_subcommand(1);

  Common common;

  std::uint64_t synth_seed = 0;
  std::size_t synth_n = 100;
  std::string synth_dims = "64x48", synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic DGD1 dataset");
  synth->add_option("--seed", synth_seed)->required();
  synth->add_option("--n", synth_n)->required();
  synth->add_option("--dims", synth_dims, "HxW");
  synth->add_option("--out", synth_out)->required();
  add_common(synth, common);

  std::string train_kind, train_data, train_out, train_frozen, train_log;
  auto* train = app.add_subcommand("train", "Train N, N_adv, G or G_adv");
  train->add_option("kind", train_kind)->required()->check(CLI::IsMember({"depth", "depth-adv", "saliency", "saliency-adv"}));
  train->add_option("--data", train_data)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--frozen-n", train_frozen, "Depth checkpoint held fixed while training G");
  train->add_option("--log", train_log, "Per-epoch loss CSV");
  add_common(train, common);

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Perturb a dataset with FGSM/IFGSM");
  attack->add_option("--n", attack_args.n)->required();
  attack->add_option("--g", attack_args.g);
  attack->add_option("--target", attack_args.target)->check(CLI::IsMember({"plain", "composite"}));
  attack->add_option("--data", attack_args.data)->required();
  attack->add_option("--eps", attack_args.eps)->required();
  attack->add_option("--iters", attack_args.iters)->required();
  attack->add_option("--alpha", attack_args.alpha, "eps-split, gray-level, or a step size");
  attack->add_option("--loss", attack_args.loss)->check(CLI::IsMember({"l1", "l2", "rel", "log10", "ldif"}));
  attack->add_flag("--self", attack_args.self, "Use the clean prediction as the target");
  attack->add_option("--out", attack_args.out)->required();
  add_common(attack, common);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate one configuration and append a CSV row");
  eval->add_option("--config-id", eval_args.config_id)->required();
  eval->add_option("--n", eval_args.n);
  eval->add_option("--n-adv", eval_args.n_adv);
  eval->add_option("--g", eval_args.g);
  eval->add_option("--g-adv", eval_args.g_adv);
  eval->add_option("--data", eval_args.data)->required();
  eval->add_option("--adv-data", eval_args.adv_data);
  eval->add_option("--out", eval_args.out)->required();
  eval->add_option("--loss-out", eval_args.loss_out, "Also append the mean loss breakdown");
  add_common(eval, common);

  DumpArgs dump_args;
  auto* dump = app.add_subcommand("dump", "Write PGM/PPM images");
  dump->add_option("--what", dump_args.what)->required();
  dump->add_option("--in", dump_args.in, "Dataset")->required();
  dump->add_option("--adv", dump_args.adv, "Adversarial dataset (diff)");
  dump->add_option("--n", dump_args.n);
  dump->add_option("--g", dump_args.g);
  dump->add_option("--count", dump_args.count);
  dump->add_option("--out", dump_args.out)->required();

  std::string workdir;
  std::uint64_t repro_seed = 7;
  bool quiet = false;
  auto* repro = app.add_subcommand("reproduce", "Run the full toy pipeline and write table1.csv / table2.csv");
  repro->add_option("--workdir", workdir)->required();
  repro->add_option("--seed", repro_seed);
  repro->add_flag("--quiet", quiet);
  add_common(repro, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid_argument: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*synth) return run_synth(synth_seed, synth_n, synth_dims, synth_out, common);
    if (*train) return run_train(train_kind, train_data, train_out, train_frozen, train_log, common);
    if (*attack) return run_attack(attack_args, common);
    if (*eval) return run_eval(eval_args, common);
    if (*dump) return run_dump(dump_args);
    if (*repro) {
      const RunConfig cfg = resolve(common);
      reproduce(cfg, workdir, repro_seed, [quiet](const std::string& m) {
        if (!quiet) std::cerr << m << "\n";
      });
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
