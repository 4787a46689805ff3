#pragma once

#include <string>
#include <vector>

#include "scenegen/assembly.hpp"

namespace scenegen::eval {

struct SceneMetrics {
  double collision_rate = 0.0;
  double floating_rate = 0.0;
  double acceptance_rate = 0.0;
  double resamples_per_object = 0.0;
  int object_count = 0;
};

// Fraction of objects intersecting at least one other object; floor
// excluded. Grid-indexed pair pruning, parallel over objects.
// Throws EmptyScene.
double collision_rate(const assembly::Scene& scene, int threads = 1);

// Serial all-pairs reference.
double collision_rate_bruteforce(const assembly::Scene& scene);

// Fraction of objects whose bottom hovers more than eps above every top
// surface beneath their footprint and above the floor.
double floating_rate(const assembly::Scene& scene, double eps = 0.01);

SceneMetrics scene_metrics(const assembly::Scene& scene,
                           const assembly::PlacementReport& report,
                           double float_eps = 0.01, int threads = 1);

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
};

struct MetricsSummary {
  Aggregate collision_rate, floating_rate, acceptance_rate,
      resamples_per_object, object_count;
  std::size_t scenes = 0;
};

// Mean +/- sd over per-scene metrics. Throws EmptyInput.
MetricsSummary aggregate(const std::vector<SceneMetrics>& metrics);

// Report document: per-scene rows, skipped inputs, aggregate footer.
std::string report_to_json(const std::vector<std::string>& scene_names,
                           const std::vector<SceneMetrics>& metrics,
                           const MetricsSummary& summary,
                           const std::vector<std::string>& skipped = {});

}  // namespace scenegen::eval
