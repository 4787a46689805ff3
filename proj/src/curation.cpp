#include "scenegen/curation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenegen/assembly.hpp"
#include "scenegen/parallel.hpp"

namespace scenegen::curation {

using geometry::OrientedBox;
using nlohmann::json;

RawScene physical_validate(const RawScene& scene, double displacement_max,
                           ValidationStats* stats) {
  if (stats) {
    *stats = {};
    stats->objects_in = scene.objects.size();
  }
  const OrientedBox floor = assembly::floor_box(scene.boundary);

  std::vector<RawObject> current = scene.objects;
  for (int pass = 0; pass <= static_cast<int>(scene.objects.size()); ++pass) {
    // settle bottom-up
    std::vector<std::size_t> order(current.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return geometry::bottom_surface_height(current[a].box) <
             geometry::bottom_surface_height(current[b].box);
    });

    std::vector<RawObject> settled;
    settled.reserve(current.size());
    std::size_t unstable = 0;
    for (std::size_t oi : order) {
      RawObject obj = current[oi];
      std::vector<const OrientedBox*> surfaces{&floor};
      for (const auto& s : settled) surfaces.push_back(&s.box);
      // an object sunk deeper than the displacement budget falls through
      const auto rest = geometry::highest_surface_below(obj.box, surfaces,
                                                        displacement_max);
      if (!rest) {
        ++unstable;
        continue;
      }
      const double dz = *rest - geometry::bottom_surface_height(obj.box);
      if (std::abs(dz) > displacement_max) {
        ++unstable;
        continue;
      }
      obj.box.center.z += dz;
      settled.push_back(std::move(obj));
    }

    // drop anything still interpenetrating
    std::vector<char> colliding(settled.size(), 0);
    for (std::size_t i = 0; i < settled.size(); ++i)
      for (std::size_t j = i + 1; j < settled.size(); ++j)
        if (geometry::obb_intersects(settled[i].box, settled[j].box))
          colliding[i] = colliding[j] = 1;
    std::vector<RawObject> kept;
    kept.reserve(settled.size());
    std::size_t intersecting = 0;
    for (std::size_t i = 0; i < settled.size(); ++i) {
      if (colliding[i])
        ++intersecting;
      else
        kept.push_back(settled[i]);
    }
    if (stats) {
      stats->dropped_unstable += unstable;
      stats->dropped_intersecting += intersecting;
    }

    // restore input order for determinism of downstream stages
    std::vector<RawObject> next;
    next.reserve(kept.size());
    for (const auto& orig : current)
      for (auto& k : kept)
        if (k.id == orig.id) {
          next.push_back(k);
          break;
        }

    bool changed = next.size() != current.size();
    if (!changed)
      for (std::size_t i = 0; i < next.size(); ++i)
        if (std::abs(next[i].box.center.z - current[i].box.center.z) > 0) {
          changed = true;
          break;
        }
    current = std::move(next);
    if (!changed) break;
  }

  RawScene out;
  out.id = scene.id;
  out.boundary = scene.boundary;
  out.objects = std::move(current);
  return out;
}

std::vector<std::pair<std::string, std::string>> extract_support(
    const RawScene& scene, double eps_v, double tau_h) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    const double bottom = geometry::bottom_surface_height(obj.box);
    const RawObject* best = nullptr;
    double best_overlap = -1.0, best_top = 0.0, best_area = 0.0;
    for (const auto& cand : scene.objects) {
      if (&cand == &obj) continue;
      const double top = geometry::top_surface_height(cand.box);
      const double gap = bottom - top;
      if (gap > eps_v || gap < -1e-6) continue;
      const double overlap = geometry::horizontal_overlap_ratio(cand.box, obj.box);
      if (overlap < tau_h) continue;
      const double area = geometry::footprint_area(cand.box);
      const bool wins =
          !best || overlap > best_overlap + 1e-12 ||
          (std::abs(overlap - best_overlap) <= 1e-12 &&
           (top > best_top + 1e-12 ||
            (std::abs(top - best_top) <= 1e-12 &&
             (area < best_area - 1e-12 ||
              (std::abs(area - best_area) <= 1e-12 && cand.id < best->id)))));
      if (wins) {
        best = &cand;
        best_overlap = overlap;
        best_top = top;
        best_area = area;
      }
    }
    pairs.emplace_back(best ? best->id : hierarchy::kFloorId, obj.id);
  }
  return pairs;
}

std::vector<std::pair<std::string, std::string>> distill_functional(
    const RawScene& scene,
    const std::vector<std::pair<std::string, std::string>>& support_pairs,
    const std::map<std::pair<std::string, std::string>, double>& rule_table) {
  std::map<std::string, const RawObject*> by_id;
  for (const auto& obj : scene.objects) by_id[obj.id] = &obj;
  std::map<std::string, std::string> support_of;
  for (const auto& [sup, dep] : support_pairs) support_of[dep] = sup;

  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [dep_sup, dep_id] : support_pairs) {
    const RawObject* dep = by_id.at(dep_id);
    const RawObject* best = nullptr;
    double best_dist = 0.0;
    for (const auto& [anc_sup, anc_id] : support_pairs) {
      if (anc_id == dep_id || anc_sup != dep_sup) continue;  // co-surface only
      const RawObject* anc = by_id.at(anc_id);
      const auto rule = rule_table.find({anc->category, dep->category});
      if (rule == rule_table.end()) continue;
      if (!geometry::contains_point(geometry::expand_box(anc->box, rule->second),
                                    dep->box.center))
        continue;
      const double dist = norm(dep->box.center - anc->box.center);
      if (!best || dist < best_dist - 1e-12 ||
          (std::abs(dist - best_dist) <= 1e-12 && anc_id < best->id)) {
        best = anc;
        best_dist = dist;
      }
    }
    if (best) out.emplace_back(best->id, dep_id);
  }
  return out;
}

hierarchy::StatTables build_stats(
    const std::vector<RelationTupleRecord>& records) {
  hierarchy::StatTables stats;
  for (const auto& r : records) {
    ++stats.sup_dep[r.support.category][r.dependent.category];
    if (r.functional)
      ++stats.func_dep[r.support.category][r.functional->category]
                      [r.dependent.category];
  }
  return stats;
}

namespace {

struct SceneOutput {
  std::vector<RelationTupleRecord> records;
  ValidationStats vstats;
  std::size_t support_pairs = 0;
  std::size_t functional_pairs = 0;
  bool floor_only = false;
};

SceneOutput curate_scene(const RawScene& raw, const CurationConfig& config) {
  SceneOutput out;
  const RawScene scene =
      physical_validate(raw, config.displacement_max, &out.vstats);

  const auto support =
      extract_support(scene, config.vertical_gap_max, config.overlap_min);
  const auto functional = distill_functional(scene, support, config.rule_table);
  out.support_pairs = support.size();
  out.functional_pairs = functional.size();

  if (config.exclude_floor_only && !support.empty()) {
    out.floor_only = std::all_of(
        support.begin(), support.end(),
        [](const auto& p) { return p.first == hierarchy::kFloorId; });
    if (out.floor_only) return out;
  }

  std::map<std::string, const RawObject*> by_id;
  for (const auto& obj : scene.objects) by_id[obj.id] = &obj;
  std::map<std::string, std::string> functional_of;
  for (const auto& [anc, dep] : functional) functional_of[dep] = anc;

  const OrientedBox floor = assembly::floor_box(scene.boundary);
  for (const auto& [sup_id, dep_id] : support) {
    RelationTupleRecord rec;
    const RawObject* dep = by_id.at(dep_id);
    rec.dependent = {dep->category, dep->box};
    if (sup_id == hierarchy::kFloorId) {
      rec.support = {hierarchy::kFloorCategory, floor};
    } else {
      const RawObject* sup = by_id.at(sup_id);
      rec.support = {sup->category, sup->box};
    }
    const auto fit = functional_of.find(dep_id);
    if (fit != functional_of.end()) {
      const RawObject* fnc = by_id.at(fit->second);
      rec.functional = ObjectRef{fnc->category, fnc->box};
    }
    rec.source_scene = scene.id;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

CurationResult curate(const std::vector<RawScene>& scenes,
                      const CurationConfig& config, int threads) {
  {
    std::set<std::string> ids;
    for (const auto& s : scenes)
      if (!ids.insert(s.id).second)
        throw ValidationError("duplicate scene id '" + s.id + "'");
  }

  std::vector<SceneOutput> outputs(scenes.size());
  parallel_for(static_cast<int>(scenes.size()), threads, [&](int i) {
    outputs[static_cast<std::size_t>(i)] =
        curate_scene(scenes[static_cast<std::size_t>(i)], config);
  });

  CurationResult result;
  result.report.scenes_in = scenes.size();
  for (auto& out : outputs) {
    result.report.objects_in += out.vstats.objects_in;
    result.report.objects_dropped_unstable += out.vstats.dropped_unstable;
    result.report.objects_dropped_intersecting += out.vstats.dropped_intersecting;
    result.report.support_pairs += out.support_pairs;
    result.report.functional_pairs += out.functional_pairs;
    if (out.floor_only) {
      ++result.report.scenes_dropped_floor_only;
      continue;
    }
    for (auto& rec : out.records) result.records.push_back(std::move(rec));
  }
  result.report.records_out = result.records.size();
  result.stats = build_stats(result.records);
  return result;
}

namespace {

json box_to_json(const OrientedBox& b) {
  return {{"center", json::array({b.center.x, b.center.y, b.center.z})},
          {"size", json::array({b.size.x, b.size.y, b.size.z})},
          {"rotation",
           json::array({b.rotation.a1.x, b.rotation.a1.y, b.rotation.a1.z,
                        b.rotation.a2.x, b.rotation.a2.y, b.rotation.a2.z})}};
}

OrientedBox box_from_json(const json& j) {
  const auto vec = [](const json& a, std::size_t n) {
    if (!a.is_array() || a.size() != n) throw ParseError("bad vector length");
  };
  OrientedBox b;
  vec(j.at("center"), 3);
  vec(j.at("size"), 3);
  vec(j.at("rotation"), 6);
  b.center = {j["center"][0], j["center"][1], j["center"][2]};
  b.size = {j["size"][0], j["size"][1], j["size"][2]};
  b.rotation.a1 = {j["rotation"][0], j["rotation"][1], j["rotation"][2]};
  b.rotation.a2 = {j["rotation"][3], j["rotation"][4], j["rotation"][5]};
  return b;
}

}  // namespace

std::vector<RawScene> scenes_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene corpus: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("scenes") || !doc["scenes"].is_array())
    throw ParseError("scene corpus: missing 'scenes' array");
  if (doc.contains("version") && doc["version"] != 1)
    throw ParseError("scene corpus: unsupported version");

  std::vector<RawScene> scenes;
  std::set<std::string> ids;
  for (const auto& js : doc["scenes"]) {
    try {
      RawScene s;
      s.id = js.at("id").get<std::string>();
      if (!ids.insert(s.id).second)
        throw ValidationError("duplicate scene id '" + s.id + "'");
      s.boundary.lo = {js.at("boundary").at("min")[0],
                       js.at("boundary").at("min")[1],
                       js.at("boundary").at("min")[2]};
      s.boundary.hi = {js.at("boundary").at("max")[0],
                       js.at("boundary").at("max")[1],
                       js.at("boundary").at("max")[2]};
      std::set<std::string> obj_ids;
      for (const auto& jo : js.at("objects")) {
        RawObject o;
        o.id = jo.at("id").get<std::string>();
        o.category = jo.at("category").get<std::string>();
        o.box = box_from_json(jo);
        if (!obj_ids.insert(o.id).second)
          throw ValidationError("scene '" + s.id + "': duplicate object id '" +
                                o.id + "'");
        s.objects.push_back(std::move(o));
      }
      scenes.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError("scene corpus: " + std::string(e.what()));
    }
  }
  return scenes;
}

std::string scenes_to_json(const std::vector<RawScene>& scenes) {
  json doc;
  doc["version"] = 1;
  doc["scenes"] = json::array();
  for (const auto& s : scenes) {
    json js;
    js["id"] = s.id;
    js["boundary"] = {
        {"min", json::array({s.boundary.lo.x, s.boundary.lo.y, s.boundary.lo.z})},
        {"max", json::array({s.boundary.hi.x, s.boundary.hi.y, s.boundary.hi.z})}};
    js["objects"] = json::array();
    for (const auto& o : s.objects) {
      json jo = box_to_json(o.box);
      jo["id"] = o.id;
      jo["category"] = o.category;
      js["objects"].push_back(std::move(jo));
    }
    doc["scenes"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

std::string records_to_jsonl(const std::vector<RelationTupleRecord>& records) {
  std::ostringstream os;
  for (const auto& r : records) {
    json j;
    j["dependent"] = box_to_json(r.dependent.box);
    j["dependent"]["category"] = r.dependent.category;
    j["support"] = box_to_json(r.support.box);
    j["support"]["category"] = r.support.category;
    if (r.functional) {
      j["functional"] = box_to_json(r.functional->box);
      j["functional"]["category"] = r.functional->category;
    } else {
      j["functional"] = nullptr;
    }
    j["source_scene"] = r.source_scene;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::vector<RelationTupleRecord> records_from_jsonl(const std::string& text) {
  std::vector<RelationTupleRecord> records;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      RelationTupleRecord r;
      r.dependent = {j.at("dependent").at("category").get<std::string>(),
                     box_from_json(j.at("dependent"))};
      r.support = {j.at("support").at("category").get<std::string>(),
                   box_from_json(j.at("support"))};
      if (j.contains("functional") && !j.at("functional").is_null())
        r.functional = ObjectRef{j.at("functional").at("category").get<std::string>(),
                                 box_from_json(j.at("functional"))};
      r.source_scene = j.value("source_scene", "");
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("records line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return records;
}

}  // namespace scenegen::curation
