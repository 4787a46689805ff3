#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scenegen/config.hpp"
#include "scenegen/curation.hpp"
#include "scenegen/eval.hpp"
#include "scenegen/predictor.hpp"

namespace scenegen::cli {

// The CLI subcommands as library calls; the binary only parses flags and
// maps exceptions to exit codes. All outputs are deterministic for a fixed
// (config, inputs, master seed) regardless of thread count.

struct CurateOutcome {
  curation::StageReport report;
};

CurateOutcome cmd_curate(const std::string& scenes_path,
                         const config::EngineConfig& config,
                         const std::string& out_records,
                         const std::string& out_stats, int threads = 1);

struct FitOutcome {
  std::vector<predictor::KeyFitInfo> keys;  // fitted keys with counts / NLL
  std::vector<std::string> skipped_keys;    // below min_count, no fallback
  double mean_nll = 0.0;                    // count-weighted over fitted keys
};

FitOutcome cmd_fit(const std::string& records_path,
                   const config::EngineConfig& config,
                   const std::string& out_params, int threads = 1);

struct GenerateOptions {
  std::optional<std::string> stats_path;      // statistical hierarchy route
  std::optional<std::string> hierarchy_path;  // imported hierarchy route
  std::optional<int> scene_count;
  std::optional<std::uint64_t> seed;
  std::optional<bool> rejection;  // --no-rejection ablation
  std::optional<bool> gravity;    // --no-gravity ablation
  int threads = 1;
};

struct GenerateOutcome {
  int scenes = 0;
  int placement_failures = 0;
};

GenerateOutcome cmd_generate(const config::EngineConfig& config,
                             const GenerateOptions& options,
                             const std::string& params_path,
                             const std::string& out_dir);

struct EvalOutcome {
  std::vector<std::string> scene_names;
  std::vector<eval::SceneMetrics> metrics;
  eval::MetricsSummary summary;
  std::vector<std::string> skipped;  // unreadable scene files
  std::string report_path;
};

EvalOutcome cmd_eval(const std::string& scene_dir,
                     const std::string& out_report = "", int threads = 1);

}  // namespace scenegen::cli
