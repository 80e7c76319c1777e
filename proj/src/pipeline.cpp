#include "depthguard/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include "depthguard/data.hpp"
#include "depthguard/serialize.hpp"

namespace depthguard {

std::string training_log_csv(const TrainResult& result) {
  std::string out = "epoch,l_depth,l_grad,l_normal,total,sparsity,objective,adversarial\n";
  char buf[256];
  for (const EpochLog& e : result.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu\n", e.epoch, e.l_depth, e.l_grad,
                  e.l_normal, e.total, e.sparsity, e.objective, e.adversarial_iterations);
    out += buf;
  }
  return out;
}

std::string report_csv(const std::vector<EvalReport>& reports) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const EvalReport& r : reports) out += csv_row(r) + "\n";
  return out;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

class Stage {
 public:
  Stage(const ProgressFn& progress, std::string name) : progress_(progress), name_(std::move(name)) {
    if (progress_) progress_(name_ + " ...");
  }
  ~Stage() {
    if (!progress_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, " done (%.1f s)", s);
    progress_(name_ + buf);
  }

 private:
  const ProgressFn& progress_;
  std::string name_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ParameterStore train_and_save(const std::function<TrainResult()>& run, const std::filesystem::path& dir,
                              const std::string& name) {
  TrainResult r = run();
  save_checkpoint(r.params, dir / (name + ".dgw"));
  write_text_atomic(dir / (name + "_train.csv"), training_log_csv(r));
  return r.params;
}

}  // namespace

ReproduceResult reproduce(RunConfig config, const std::filesystem::path& workdir, std::uint64_t seed,
                          const ProgressFn& progress) {
  config.data.seed = seed;
  config.data.split_seed = Rng(seed).split(1).bits();
  config.train.seed = Rng(seed).split(2).bits();
  config.validate();
  std::filesystem::create_directories(workdir);
  write_text_atomic(workdir / "config.resolved.ini", config.to_text());

  Dataset all;
  {
    Stage s(progress, "synthesize " + std::to_string(config.data.n) + " scenes");
    all = synth_generate(config.data.seed, config.data.n, config.data.height, config.data.width);
  }
  auto [train, test] = split(all, config.data.train_fraction, config.data.split_seed);
  save_dataset(workdir / "train.dgd", train);
  save_dataset(workdir / "test.dgd", test);

  ModelSet models;
  {
    Stage s(progress, "train N");
    models.n = train_and_save([&] { return train_depth(config.depth_network(), train, config.depth_training()); },
                              workdir, "N");
  }
  {
    Stage s(progress, "train N_adv");
    models.n_adv = train_and_save(
        [&] { return train_depth_adv(config.depth_network(), train, config.depth_training()); }, workdir, "N_adv");
  }
  {
    Stage s(progress, "train G");
    models.g = train_and_save(
        [&] { return train_saliency_clean(*models.n, config.saliency_network(), train, config.saliency_training(false)); },
        workdir, "G");
  }
  {
    Stage s(progress, "train G_adv");
    models.g_adv = train_and_save(
        [&] { return train_saliency_adv(*models.n, config.saliency_network(), train, config.saliency_training(true)); },
        workdir, "G_adv");
  }

  AttackConfig attack = config.attack;
  attack.iters = config.eval.iters;
  attack.target = AttackTarget::plain_n;

  // x* depends only on the victim network and eps, so each set is generated once.
  std::map<std::pair<bool, double>, Dataset> adversarial;
  const auto adversarial_for = [&](ConfigurationId id, const AttackConfig& a) -> const Dataset& {
    const bool hardened = id == ConfigurationId::C;
    auto it = adversarial.find({hardened, a.eps});
    if (it == adversarial.end())
      it = adversarial.emplace(std::pair{hardened, a.eps},
                               generate_adversarial(hardened ? *models.n_adv : *models.n, test, a)).first;
    return it->second;
  };

  const auto run_table = [&](const std::vector<double>& eps_list, std::vector<ConfigurationId> ids,
                             const std::string& name) {
    Stage s(progress, name);
    std::vector<EvalReport> rows;
    for (ConfigurationId id : ids) {
      for (double eps : eps_list) {
        AttackConfig a = attack;
        a.eps = eps;
        rows.push_back(evaluate_configuration(id, models, test, adversarial_for(id, a), a));
      }
    }
    write_text_atomic(workdir / name, report_csv(rows));
    return rows;
  };

  ReproduceResult result;
  using C = ConfigurationId;
  result.table1 = run_table(config.eval.table1_eps, {C::A, C::D, C::E, C::F}, "table1.csv");
  result.table2 = run_table(config.eval.table2_eps, {C::A, C::C, C::E, C::F}, "table2.csv");
  return result;
}

}  // namespace depthguard
