// Compares the OpenMP / grid-indexed kernels against their serial
// reference implementations on fixture-scale workloads. The reference
// paths are the same ones the tests use as oracles.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "scenegen/assembly.hpp"
#include "scenegen/eval.hpp"
#include "scenegen/predictor.hpp"
#include "testsupport.hpp"

using namespace scenegen;
namespace ts = scenegen::testsupport;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename Fn>
double time_ms(Fn&& fn, int reps = 3) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const double t0 = now_ms();
    fn();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

void row(const char* name, double ref_ms, double fast_ms) {
  std::printf("%-38s %10.2f ms %10.2f ms %8.2fx\n", name, ref_ms, fast_ms,
              ref_ms / fast_ms);
}

void bench_feasibility() {
  Rng rng(101);
  const Aabb boundary{{0, 0, 0}, {20, 20, 3}};
  assembly::SceneState state(boundary, 0.5);
  for (int i = 0; i < 400; ++i) {
    const Vec3 c{rng.uniform(0.5, 19.5), rng.uniform(0.5, 19.5),
                 rng.uniform(0.2, 2.0)};
    state.add("p" + std::to_string(i), "box", ts::random_box(rng, 0.2, 0.9, 0.0, c));
  }
  std::vector<geometry::OrientedBox> probes;
  for (int i = 0; i < 5000; ++i) {
    const Vec3 c{rng.uniform(0.5, 19.5), rng.uniform(0.5, 19.5),
                 rng.uniform(0.2, 2.0)};
    probes.push_back(ts::random_box(rng, 0.2, 0.9, 0.0, c));
  }
  volatile int sink = 0;
  const double ref = time_ms([&] {
    int n = 0;
    for (const auto& p : probes) n += assembly::feasible_bruteforce(p, state);
    sink = n;
  });
  int brute_count = sink;
  const double fast = time_ms([&] {
    int n = 0;
    for (const auto& p : probes) n += assembly::feasible(p, state);
    sink = n;
  });
  if (sink != brute_count) std::printf("!! feasibility results diverged\n");
  row("feasible: all-pairs vs grid index", ref, fast);
}

void bench_collision_rate() {
  Rng rng(102);
  assembly::Scene scene;
  scene.boundary = {{0, 0, 0}, {30, 30, 3}};
  for (int i = 0; i < 1500; ++i) {
    const Vec3 c{rng.uniform(0.5, 29.5), rng.uniform(0.5, 29.5),
                 rng.uniform(0.2, 2.0)};
    scene.objects.push_back({"o" + std::to_string(i), "box",
                             ts::random_box(rng, 0.2, 0.8, 0.0, c), "floor", {}});
  }
  double ref_rate = 0.0, fast_rate = 0.0;
  const double ref =
      time_ms([&] { ref_rate = eval::collision_rate_bruteforce(scene); });
  const double fast = time_ms([&] { fast_rate = eval::collision_rate(scene, 0); });
  if (ref_rate != fast_rate) std::printf("!! collision rates diverged\n");
  row("collision_rate: brute vs grid+omp", ref, fast);
}

void bench_fit_table(const config::EngineConfig& cfg) {
  // synthetic per-key training data at fixture scale
  const auto table = ts::bootstrap_table(cfg);
  const auto stats = ts::bedroom_stats();
  const auto built = ts::assemble_fixture(150, 424242, true, true, cfg, table,
                                          stats, 0);
  std::vector<curation::RawScene> raw;
  for (std::size_t i = 0; i < built.size(); ++i)
    raw.push_back(ts::to_raw_scene(built[i].scene, "b" + std::to_string(i)));
  const auto curated = curation::curate(raw, cfg.curation, 0);

  predictor::FitTableOptions opts;
  opts.components = cfg.fit.components;
  opts.lambda = cfg.fit.lambda;
  opts.min_count = cfg.fit.min_count;
  opts.seed = cfg.master_seed;

  predictor::PredictorTable serial_fit, parallel_fit;
  opts.threads = 1;
  const double ref = time_ms(
      [&] { serial_fit = predictor::fit_table(curated.records, opts); }, 2);
  opts.threads = 0;
  const double fast = time_ms(
      [&] { parallel_fit = predictor::fit_table(curated.records, opts); }, 2);
  if (serial_fit.entries.size() != parallel_fit.entries.size())
    std::printf("!! fit tables diverged\n");
  row("fit_table: 1 thread vs omp", ref, fast);
}

void bench_assembly(const config::EngineConfig& cfg) {
  const auto table = ts::bootstrap_table(cfg);
  const auto stats = ts::bedroom_stats();
  std::vector<ts::BuiltScene> serial_scenes, parallel_scenes;
  const double ref = time_ms(
      [&] {
        serial_scenes =
            ts::assemble_fixture(300, 909, true, true, cfg, table, stats, 1);
      },
      2);
  const double fast = time_ms(
      [&] {
        parallel_scenes =
            ts::assemble_fixture(300, 909, true, true, cfg, table, stats, 0);
      },
      2);
  bool same = serial_scenes.size() == parallel_scenes.size();
  for (std::size_t i = 0; same && i < serial_scenes.size(); ++i)
    same = assembly::scene_to_json(serial_scenes[i].scene,
                                   serial_scenes[i].report) ==
           assembly::scene_to_json(parallel_scenes[i].scene,
                                   parallel_scenes[i].report);
  if (!same) std::printf("!! assembled batches diverged\n");
  row("assemble 300 scenes: 1 thread vs omp", ref, fast);
}

void bench_curation(const config::EngineConfig& cfg) {
  const auto table = ts::bootstrap_table(cfg);
  const auto stats = ts::bedroom_stats();
  const auto built =
      ts::assemble_fixture(400, 11011, true, true, cfg, table, stats, 0);
  std::vector<curation::RawScene> raw;
  for (std::size_t i = 0; i < built.size(); ++i)
    raw.push_back(ts::to_raw_scene(built[i].scene, "c" + std::to_string(i)));

  curation::CurationResult serial_out, parallel_out;
  const double ref =
      time_ms([&] { serial_out = curation::curate(raw, cfg.curation, 1); }, 2);
  const double fast =
      time_ms([&] { parallel_out = curation::curate(raw, cfg.curation, 0); }, 2);
  if (curation::records_to_jsonl(serial_out.records) !=
      curation::records_to_jsonl(parallel_out.records))
    std::printf("!! curation outputs diverged\n");
  row("curate 400 scenes: 1 thread vs omp", ref, fast);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp disabled; comparing identical serial paths\n");
#endif
  std::printf("%-38s %13s %13s %9s\n", "kernel", "reference", "fast path",
              "speedup");

  const auto cfg = config::default_config();
  bench_feasibility();
  bench_collision_rate();
  bench_fit_table(cfg);
  bench_assembly(cfg);
  bench_curation(cfg);
  return 0;
}
