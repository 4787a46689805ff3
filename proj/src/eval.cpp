#include "scenegen/eval.hpp"

#include <cmath>

#include <json.hpp>

#include "scenegen/parallel.hpp"

namespace scenegen::eval {

using geometry::OrientedBox;
using nlohmann::json;

double collision_rate(const assembly::Scene& scene, int threads) {
  const std::size_t n = scene.objects.size();
  if (n == 0) throw EmptyScene("collision_rate: empty scene");

  assembly::GridIndex index(scene.boundary, 0.5);
  for (std::size_t i = 0; i < n; ++i)
    index.insert(static_cast<int>(i), scene.objects[i].box);

  std::vector<char> colliding(n, 0);
  parallel_for(static_cast<int>(n), threads, [&](int i) {
    std::vector<int> shortlist;
    index.query(scene.objects[static_cast<std::size_t>(i)].box, shortlist);
    for (int j : shortlist) {
      if (j == i) continue;
      if (geometry::obb_intersects(scene.objects[static_cast<std::size_t>(i)].box,
                                   scene.objects[static_cast<std::size_t>(j)].box)) {
        colliding[static_cast<std::size_t>(i)] = 1;
        return;
      }
    }
  });
  std::size_t count = 0;
  for (char c : colliding) count += static_cast<std::size_t>(c);
  return static_cast<double>(count) / static_cast<double>(n);
}

double collision_rate_bruteforce(const assembly::Scene& scene) {
  const std::size_t n = scene.objects.size();
  if (n == 0) throw EmptyScene("collision_rate: empty scene");
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (geometry::obb_intersects(scene.objects[i].box, scene.objects[j].box)) {
        ++count;
        break;
      }
    }
  }
  return static_cast<double>(count) / static_cast<double>(n);
}

double floating_rate(const assembly::Scene& scene, double eps) {
  const std::size_t n = scene.objects.size();
  if (n == 0) throw EmptyScene("floating_rate: empty scene");
  const double floor_z = scene.boundary.lo.z;

  std::size_t floating = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double bottom = geometry::bottom_surface_height(scene.objects[i].box);
    if (bottom - floor_z <= eps) continue;  // on (or through) the floor
    std::vector<const OrientedBox*> surfaces;
    surfaces.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) surfaces.push_back(&scene.objects[j].box);
    const auto rest =
        geometry::highest_surface_below(scene.objects[i].box, surfaces);
    if (!rest || bottom - *rest > eps) ++floating;
  }
  return static_cast<double>(floating) / static_cast<double>(n);
}

SceneMetrics scene_metrics(const assembly::Scene& scene,
                           const assembly::PlacementReport& report,
                           double float_eps, int threads) {
  SceneMetrics m;
  m.object_count = static_cast<int>(scene.objects.size());
  if (!scene.objects.empty()) {
    m.collision_rate = collision_rate(scene, threads);
    m.floating_rate = floating_rate(scene, float_eps);
  }
  m.acceptance_rate = report.acceptance_rate;
  m.resamples_per_object = report.resamples_per_object;
  return m;
}

namespace {

Aggregate agg(std::vector<double> v) {
  Aggregate a;
  const std::size_t n = v.size();
  for (double x : v) a.mean += x;
  a.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    a.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return a;
}

}  // namespace

MetricsSummary aggregate(const std::vector<SceneMetrics>& metrics) {
  if (metrics.empty()) throw EmptyInput("aggregate: no metrics");
  MetricsSummary s;
  s.scenes = metrics.size();
  std::vector<double> v(metrics.size());
  auto fill = [&](auto field) {
    for (std::size_t i = 0; i < metrics.size(); ++i)
      v[i] = static_cast<double>(metrics[i].*field);
    return agg(v);
  };
  s.collision_rate = fill(&SceneMetrics::collision_rate);
  s.floating_rate = fill(&SceneMetrics::floating_rate);
  s.acceptance_rate = fill(&SceneMetrics::acceptance_rate);
  s.resamples_per_object = fill(&SceneMetrics::resamples_per_object);
  s.object_count = fill(&SceneMetrics::object_count);
  return s;
}

std::string report_to_json(const std::vector<std::string>& scene_names,
                           const std::vector<SceneMetrics>& metrics,
                           const MetricsSummary& summary,
                           const std::vector<std::string>& skipped) {
  json doc;
  doc["version"] = 1;
  doc["scenes"] = json::array();
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    doc["scenes"].push_back({{"name", scene_names[i]},
                             {"collision_rate", m.collision_rate},
                             {"floating_rate", m.floating_rate},
                             {"acceptance_rate", m.acceptance_rate},
                             {"resamples_per_object", m.resamples_per_object},
                             {"object_count", m.object_count}});
  }
  doc["skipped"] = skipped;
  auto put = [](const Aggregate& a) {
    return json{{"mean", a.mean}, {"sd", a.sd}};
  };
  doc["aggregate"] = {{"scenes", summary.scenes},
                      {"collision_rate", put(summary.collision_rate)},
                      {"floating_rate", put(summary.floating_rate)},
                      {"acceptance_rate", put(summary.acceptance_rate)},
                      {"resamples_per_object", put(summary.resamples_per_object)},
                      {"object_count", put(summary.object_count)}};
  return doc.dump(2) + "\n";
}

}  // namespace scenegen::eval
