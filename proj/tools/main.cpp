#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "scenegen/commands.hpp"
#include "scenegen/io.hpp"

namespace {

using namespace scenegen;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitPlacementAbort = 3;

int run(int argc, char** argv) {
  CLI::App app{"scenegen - procedural indoor scene synthesis"};
  app.require_subcommand(1);

  std::string config_path, scenes_arg, out_arg, records_path, params_path;
  std::string hierarchy_path, stats_path, report_path;
  int parallel = 1;
  bool no_rejection = false, no_gravity = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int scene_count = -1;

  auto* curate = app.add_subcommand("curate", "extract relation tuples from scenes");
  curate->add_option("--config", config_path, "engine configuration")->required();
  curate->add_option("--scenes", scenes_arg, "raw scene corpus (json)")->required();
  curate->add_option("--out", out_arg, "output directory")->required();
  curate->add_option("--parallel", parallel, "worker threads");

  auto* fit = app.add_subcommand("fit", "fit per-key mixture tables from records");
  fit->add_option("--config", config_path, "engine configuration")->required();
  fit->add_option("--records", records_path, "relation records (jsonl)")->required();
  fit->add_option("--params", params_path, "output parameter file")->required();
  fit->add_option("--parallel", parallel, "worker threads");

  auto* generate = app.add_subcommand("generate", "synthesize scenes");
  generate->add_option("--config", config_path, "engine configuration")->required();
  generate->add_option("--params", params_path, "predictor parameter file")->required();
  generate->add_option("--stats", stats_path, "stats tables (statistical hierarchies)");
  generate->add_option("--hierarchy", hierarchy_path, "hierarchy document to import");
  generate->add_option("--out", out_arg, "output directory")->required();
  generate->add_option("--scenes", scene_count, "number of scenes (overrides config)");
  generate->add_option("--seed", seed, "master seed (overrides config)")
      ->each([&](const std::string&) { seed_set = true; });
  generate->add_option("--parallel", parallel, "worker threads");
  generate->add_flag("--no-rejection", no_rejection, "disable rejection sampling");
  generate->add_flag("--no-gravity", no_gravity, "disable gravity refinement");

  auto* eval_cmd = app.add_subcommand("eval", "score generated scenes");
  eval_cmd->add_option("--scenes", scenes_arg, "directory of scene_*.json")->required();
  eval_cmd->add_option("--out", report_path, "metrics report path");
  eval_cmd->add_option("--parallel", parallel, "worker threads");

  auto* config_cmd = app.add_subcommand("config", "configuration utilities");
  auto* print_defaults =
      config_cmd->add_subcommand("print-defaults", "dump the built-in defaults");
  config_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  if (print_defaults->parsed()) {
    std::cout << config::to_json(config::default_config());
    return kExitOk;
  }

  if (curate->parsed()) {
    const auto cfg = config::load(config_path);
    const auto out = cli::cmd_curate(scenes_arg, cfg, out_arg + "/records.jsonl",
                                     out_arg + "/stats.json", parallel);
    const auto& r = out.report;
    std::printf("scenes            %zu (floor-only dropped: %zu)\n", r.scenes_in,
                r.scenes_dropped_floor_only);
    std::printf("objects           %zu (unstable dropped: %zu, intersecting dropped: %zu)\n",
                r.objects_in, r.objects_dropped_unstable,
                r.objects_dropped_intersecting);
    std::printf("support pairs     %zu\n", r.support_pairs);
    std::printf("functional pairs  %zu\n", r.functional_pairs);
    std::printf("records written   %zu\n", r.records_out);
    if (r.records_out == 0)
      std::fprintf(stderr, "warning: corpus produced no records\n");
    return kExitOk;
  }

  if (fit->parsed()) {
    const auto cfg = config::load(config_path);
    const auto out = cli::cmd_fit(records_path, cfg, params_path, parallel);
    for (const auto& k : out.keys)
      std::printf("key %-40s n=%-6zu mean NLL %.6f\n",
                  predictor::to_string(k.key).c_str(), k.count, k.mean_nll);
    for (const auto& k : out.skipped_keys)
      std::fprintf(stderr, "warning: key %s below min_count, skipped\n", k.c_str());
    std::printf("fitted %zu keys, overall mean NLL %.6f\n", out.keys.size(),
                out.mean_nll);
    return kExitOk;
  }

  if (generate->parsed()) {
    const auto cfg = config::load(config_path);
    cli::GenerateOptions options;
    if (!stats_path.empty()) options.stats_path = stats_path;
    if (!hierarchy_path.empty()) options.hierarchy_path = hierarchy_path;
    if (scene_count >= 0) options.scene_count = scene_count;
    if (seed_set) options.seed = seed;
    if (no_rejection) options.rejection = false;
    if (no_gravity) options.gravity = false;
    options.threads = parallel;
    const auto out = cli::cmd_generate(cfg, options, params_path, out_arg);
    std::printf("wrote %d scenes to %s (%d placement failures)\n", out.scenes,
                out_arg.c_str(), out.placement_failures);
    return kExitOk;
  }

  if (eval_cmd->parsed()) {
    const auto out = cli::cmd_eval(scenes_arg, report_path, parallel);
    std::printf("%-16s %10s %10s %10s %10s %8s\n", "scene", "collision",
                "floating", "accept", "resample", "objects");
    for (std::size_t i = 0; i < out.metrics.size(); ++i) {
      const auto& m = out.metrics[i];
      std::printf("%-16s %10.4f %10.4f %10.4f %10.4f %8d\n",
                  out.scene_names[i].c_str(), m.collision_rate, m.floating_rate,
                  m.acceptance_rate, m.resamples_per_object, m.object_count);
    }
    const auto& s = out.summary;
    std::printf("aggregate (%zu scenes): collision %.4f +/- %.4f, floating %.4f +/- %.4f, "
                "accept %.4f +/- %.4f, resamples %.4f +/- %.4f\n",
                s.scenes, s.collision_rate.mean, s.collision_rate.sd,
                s.floating_rate.mean, s.floating_rate.sd, s.acceptance_rate.mean,
                s.acceptance_rate.sd, s.resamples_per_object.mean,
                s.resamples_per_object.sd);
    for (const auto& w : out.skipped)
      std::fprintf(stderr, "warning: skipped %s\n", w.c_str());
    std::printf("report written to %s\n", out.report_path.c_str());
    return kExitOk;
  }

  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const scenegen::assembly::PlacementAborted& e) {
    std::fprintf(stderr, "placement aborted: %s\n", e.what());
    return kExitPlacementAbort;
  } catch (const scenegen::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitIo;
  } catch (const scenegen::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const scenegen::UnknownSceneType& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const scenegen::UnknownRelation& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const scenegen::InsufficientData& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const scenegen::EmptyInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const scenegen::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
}
