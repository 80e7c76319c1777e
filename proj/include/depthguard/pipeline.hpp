#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "depthguard/config.hpp"
#include "depthguard/defense.hpp"
#include "depthguard/metrics.hpp"

namespace depthguard {

/// Per-epoch loss breakdown of a training run as CSV text.
std::string training_log_csv(const TrainResult& result);

/// CSV text: metrics header plus one row per report.
std::string report_csv(const std::vector<EvalReport>& reports);

/// Writes `text` atomically.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

struct ReproduceResult {
  std::vector<EvalReport> table1;
  std::vector<EvalReport> table2;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs the whole toy pipeline in `workdir`: synthesize data, train N,
/// N_adv, G and G_adv, then write table1.csv (A, D, E, F over
/// eval.table1_eps) and table2.csv (A, C, E, F over eval.table2_eps).
/// `seed` replaces the data, split and training seeds of `config`.
ReproduceResult reproduce(RunConfig config, const std::filesystem::path& workdir, std::uint64_t seed,
                          const ProgressFn& progress = {});

}  // namespace depthguard
