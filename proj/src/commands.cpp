#include "scenegen/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include <json.hpp>

#include "scenegen/assembly.hpp"
#include "scenegen/hierarchy.hpp"
#include "scenegen/io.hpp"
#include "scenegen/parallel.hpp"

namespace scenegen::cli {

namespace fs = std::filesystem;

CurateOutcome cmd_curate(const std::string& scenes_path,
                         const config::EngineConfig& config,
                         const std::string& out_records,
                         const std::string& out_stats, int threads) {
  const auto scenes = curation::scenes_from_json(read_file(scenes_path));
  curation::CurationResult result =
      curation::curate(scenes, config.curation, threads);
  write_file_atomic(out_records, curation::records_to_jsonl(result.records));
  write_file_atomic(out_stats, hierarchy::stats_to_json(result.stats));

  // per-stage drop counts next to the records
  {
    nlohmann::json rep;
    const auto& r = result.report;
    rep["version"] = 1;
    rep["scenes_in"] = r.scenes_in;
    rep["scenes_dropped_floor_only"] = r.scenes_dropped_floor_only;
    rep["objects_in"] = r.objects_in;
    rep["objects_dropped_unstable"] = r.objects_dropped_unstable;
    rep["objects_dropped_intersecting"] = r.objects_dropped_intersecting;
    rep["support_pairs"] = r.support_pairs;
    rep["functional_pairs"] = r.functional_pairs;
    rep["records_out"] = r.records_out;
    const auto dir = fs::path(out_records).parent_path();
    write_file_atomic((dir / "curation_report.json").string(),
                      rep.dump(2) + "\n");
  }
  return {result.report};
}

FitOutcome cmd_fit(const std::string& records_path,
                   const config::EngineConfig& config,
                   const std::string& out_params, int threads) {
  const auto records = curation::records_from_jsonl(read_file(records_path));

  predictor::FitTableOptions opts;
  opts.components = config.fit.components;
  opts.lambda = config.fit.lambda;
  opts.min_count = config.fit.min_count;
  opts.em.tol = config.fit.tol;
  opts.em.max_iters = config.fit.max_iters;
  opts.seed = config.master_seed;
  opts.threads = threads;

  FitOutcome outcome;
  predictor::PredictorTable table =
      predictor::fit_table(records, opts, &outcome.keys);

  // keys that ended up unanswerable even through the coarse fallback
  std::set<predictor::RelationKey> seen;
  for (const auto& r : records) {
    predictor::RelationKey k;
    k.support = r.support.category;
    k.dependent = r.dependent.category;
    if (r.functional) k.functional = r.functional->category;
    seen.insert(k);
  }
  for (const auto& k : seen) {
    bool answerable = table.entries.count(k) > 0;
    if (!answerable && k.functional) {
      predictor::RelationKey coarse = k;
      coarse.functional.reset();
      answerable = table.entries.count(coarse) > 0;
    }
    if (!answerable) outcome.skipped_keys.push_back(predictor::to_string(k));
  }

  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& info : outcome.keys) {
    weighted += static_cast<double>(info.count) * info.mean_nll;
    total += info.count;
  }
  outcome.mean_nll = total > 0 ? weighted / static_cast<double>(total) : 0.0;

  predictor::save_params(table, out_params);
  return outcome;
}

namespace {

std::string scene_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  return buf;
}

}  // namespace

GenerateOutcome cmd_generate(const config::EngineConfig& config,
                             const GenerateOptions& options,
                             const std::string& params_path,
                             const std::string& out_dir) {
  if (options.stats_path.has_value() == options.hierarchy_path.has_value())
    throw ValidationError("generate: exactly one of --stats / --hierarchy");

  const predictor::PredictorTable table = predictor::load_params(params_path);

  std::optional<hierarchy::StatTables> stats;
  std::optional<hierarchy::HierarchySpec> imported;
  if (options.stats_path)
    stats = hierarchy::stats_from_json(read_file(*options.stats_path));
  else
    imported = hierarchy::parse_hierarchy(read_file(*options.hierarchy_path));

  assembly::AssemblyConfig asm_config = config.assembly;
  if (options.rejection) asm_config.rejection_enabled = *options.rejection;
  if (options.gravity) asm_config.gravity_enabled = *options.gravity;
  const std::uint64_t master = options.seed.value_or(config.master_seed);
  const int count = options.scene_count.value_or(config.generation.scene_count);

  fs::create_directories(out_dir);

  std::vector<int> failures(static_cast<std::size_t>(count), 0);
  parallel_for(count, options.threads, [&](int i) {
    const std::uint64_t scene_seed = derive_seed(master, static_cast<std::uint64_t>(i));
    hierarchy::HierarchySpec spec;
    if (imported) {
      spec = *imported;
    } else {
      Rng hrng(derive_seed(scene_seed, std::uint64_t{1}));
      spec = hierarchy::generate(config.generation.scene_type, config.templates,
                                 *stats, config.generation.n_max,
                                 config.generation.k, hrng);
    }
    assembly::AssemblyConfig cfg = asm_config;
    cfg.seed = derive_seed(scene_seed, std::uint64_t{2});
    auto [scene, report] =
        assembly::assemble(spec, table, config.assets, config.boundary, cfg);
    failures[static_cast<std::size_t>(i)] = report.failed;

    const std::string base = (fs::path(out_dir) / scene_file_name(i)).string();
    write_file_atomic(base + ".json", assembly::scene_to_json(scene, report));
    write_file_atomic(base + ".obj", assembly::scene_to_obj(scene));
  });

  GenerateOutcome outcome;
  outcome.scenes = count;
  for (int f : failures) outcome.placement_failures += f;
  return outcome;
}

EvalOutcome cmd_eval(const std::string& scene_dir, const std::string& out_report,
                     int threads) {
  if (!fs::is_directory(scene_dir))
    throw Error("not a directory: " + scene_dir);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(scene_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("scene_", 0) == 0 && name.size() > 5 &&
        name.substr(name.size() - 5) == ".json")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw EmptyInput("no scene_*.json files in " + scene_dir);

  EvalOutcome outcome;
  for (const auto& path : files) {
    try {
      auto [scene, report] = assembly::scene_from_json(read_file(path));
      outcome.metrics.push_back(
          eval::scene_metrics(scene, report, 0.01, threads));
      outcome.scene_names.push_back(fs::path(path).filename().string());
    } catch (const Error& e) {
      outcome.skipped.push_back(fs::path(path).filename().string() + ": " +
                                e.what());
    }
  }
  if (outcome.metrics.empty())
    throw EmptyInput("no readable scenes in " + scene_dir);
  outcome.summary = eval::aggregate(outcome.metrics);

  outcome.report_path = out_report.empty()
                            ? (fs::path(scene_dir) / "metrics.json").string()
                            : out_report;
  write_file_atomic(outcome.report_path,
                    eval::report_to_json(outcome.scene_names, outcome.metrics,
                                         outcome.summary, outcome.skipped));
  return outcome;
}

}  // namespace scenegen::cli
