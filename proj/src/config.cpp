#include "scenegen/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "scenegen/io.hpp"

namespace scenegen::config {

using nlohmann::json;

EngineConfig default_config() {
  EngineConfig c;
  c.taxonomy = {"floor",  "bed",  "nightstand", "wardrobe", "desk", "chair",
                "lamp",   "laptop", "keyboard", "mouse",    "book", "mug"};
  c.templates["bedroom"] = {
      {"floor", "bed_0"},   {"floor", "wardrobe_0"}, {"floor", "desk_0"},
      {"desk_0", "laptop_0"}, {"desk_0", "book_0"},  {"desk_0", "lamp_0"},
  };
  c.assets = {
      {"bed", {2.0, 1.6, 0.5}},      {"nightstand", {0.5, 0.5, 0.55}},
      {"wardrobe", {1.2, 0.6, 2.0}}, {"desk", {1.4, 0.7, 0.75}},
      {"chair", {0.5, 0.5, 0.9}},    {"lamp", {0.2, 0.2, 0.45}},
      {"laptop", {0.35, 0.25, 0.03}}, {"keyboard", {0.45, 0.15, 0.03}},
      {"mouse", {0.07, 0.11, 0.04}}, {"book", {0.15, 0.22, 0.03}},
      {"mug", {0.09, 0.09, 0.1}},
  };
  c.curation.rule_table = {
      {{"bed", "nightstand"}, 1.5}, {{"desk", "chair"}, 2.0},
      {{"laptop", "keyboard"}, 3.0}, {{"laptop", "mouse"}, 4.0},
      {{"book", "mug"}, 4.0},
  };
  return c;
}

void validate(const EngineConfig& c) {
  std::set<std::string> taxonomy(c.taxonomy.begin(), c.taxonomy.end());
  if (taxonomy.size() != c.taxonomy.size())
    throw ValidationError("taxonomy: duplicate category");
  if (!taxonomy.count(hierarchy::kFloorCategory))
    throw ValidationError("taxonomy: missing 'floor'");
  for (const auto& cat : c.taxonomy)
    if (cat.empty() || cat == "-" ||
        cat.find_first_of(" \t\r\n|") != std::string::npos)
      throw ValidationError("taxonomy: invalid category label '" + cat + "'");

  for (const auto& [scene_type, edges] : c.templates)
    for (const auto& e : edges)
      for (const auto& label : e)
        if (!taxonomy.count(hierarchy::category_of(label)))
          throw ValidationError("templates." + scene_type + ": label '" + label +
                                "' is not in the taxonomy");
  for (const auto& [cat, size] : c.assets) {
    if (!taxonomy.count(cat))
      throw ValidationError("assets: category '" + cat + "' not in taxonomy");
    if (!(size.x > 0 && size.y > 0 && size.z > 0))
      throw ValidationError("assets." + cat + ": size must be positive");
  }
  for (const auto& [key, kf] : c.curation.rule_table) {
    if (!taxonomy.count(key.first) || !taxonomy.count(key.second))
      throw ValidationError("curation.rule_table: unknown category in (" +
                            key.first + ", " + key.second + ")");
    if (!(kf >= 1.0))
      throw ValidationError("curation.rule_table: k_f must be >= 1");
  }
  if (!(c.curation.vertical_gap_max > 0))
    throw ValidationError("curation.vertical_gap_max: must be > 0");
  if (!(c.curation.displacement_max > 0))
    throw ValidationError("curation.displacement_max: must be > 0");
  if (!(c.curation.overlap_min > 0 && c.curation.overlap_min <= 1))
    throw ValidationError("curation.overlap_min: must be in (0, 1]");
  if (c.fit.components < 1) throw ValidationError("fit.components: must be >= 1");
  if (c.fit.min_count < 1) throw ValidationError("fit.min_count: must be >= 1");
  if (c.fit.max_iters < 1) throw ValidationError("fit.max_iters: must be >= 1");
  if (!(c.fit.lambda >= 0)) throw ValidationError("fit.lambda: must be >= 0");
  if (!(c.fit.tol > 0)) throw ValidationError("fit.tol: must be > 0");
  if (!(c.boundary.hi.x > c.boundary.lo.x && c.boundary.hi.y > c.boundary.lo.y &&
        c.boundary.hi.z > c.boundary.lo.z))
    throw ValidationError("boundary: max must exceed min on every axis");
  if (c.assembly.max_attempts < 1)
    throw ValidationError("assembly.max_attempts: must be >= 1");
  if (!(c.assembly.cell_size > 0))
    throw ValidationError("assembly.cell_size: must be > 0");
  if (c.generation.n_max < 0) throw ValidationError("generation.n_max: must be >= 0");
  if (!(c.generation.k >= 0)) throw ValidationError("generation.k: must be >= 0");
  if (c.generation.scene_count < 0)
    throw ValidationError("generation.scene_count: must be >= 0");
  if (!c.templates.count(c.generation.scene_type))
    throw ValidationError("generation.scene_type: no template for '" +
                          c.generation.scene_type + "'");
  // every placeable category needs a canonical asset box
  std::set<std::string> placeable;
  for (const auto& [scene_type, edges] : c.templates)
    for (const auto& e : edges) {
      const std::string cat = hierarchy::category_of(e[1]);
      if (cat != hierarchy::kFloorCategory) placeable.insert(cat);
    }
  for (const auto& cat : placeable)
    if (!c.assets.count(cat))
      throw ValidationError("assets: no canonical size for template category '" +
                            cat + "'");
}

namespace {

json vec3(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError("config." + field + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string to_json(const EngineConfig& c) {
  json doc;
  doc["version"] = 1;
  doc["master_seed"] = c.master_seed;
  doc["taxonomy"] = c.taxonomy;
  doc["templates"] = json::object();
  for (const auto& [scene_type, edges] : c.templates) {
    json arr = json::array();
    for (const auto& e : edges) arr.push_back(json::array({e[0], e[1]}));
    doc["templates"][scene_type] = std::move(arr);
  }
  doc["assets"] = json::object();
  for (const auto& [cat, size] : c.assets) doc["assets"][cat] = vec3(size);
  json rules = json::array();
  for (const auto& [key, kf] : c.curation.rule_table)
    rules.push_back(
        {{"anchor", key.first}, {"dependent", key.second}, {"k_f", kf}});
  doc["curation"] = {{"vertical_gap_max", c.curation.vertical_gap_max},
                     {"overlap_min", c.curation.overlap_min},
                     {"displacement_max", c.curation.displacement_max},
                     {"exclude_floor_only", c.curation.exclude_floor_only},
                     {"rule_table", std::move(rules)}};
  doc["fit"] = {{"components", c.fit.components},
                {"lambda", c.fit.lambda},
                {"min_count", c.fit.min_count},
                {"tol", c.fit.tol},
                {"max_iters", c.fit.max_iters}};
  doc["assembly"] = {
      {"boundary", {{"min", vec3(c.boundary.lo)}, {"max", vec3(c.boundary.hi)}}},
      {"max_attempts", c.assembly.max_attempts},
      {"gravity_enabled", c.assembly.gravity_enabled},
      {"rejection_enabled", c.assembly.rejection_enabled},
      {"failure_policy",
       c.assembly.failure_policy == assembly::FailurePolicy::kAbort ? "abort"
                                                                    : "skip"},
      {"cell_size", c.assembly.cell_size}};
  doc["generation"] = {{"scene_type", c.generation.scene_type},
                       {"n_max", c.generation.n_max},
                       {"k", c.generation.k},
                       {"scene_count", c.generation.scene_count}};
  return doc.dump(2) + "\n";
}

EngineConfig from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (doc.contains("version") && doc["version"] != 1)
    throw ParseError("config: unsupported version");

  EngineConfig c;
  c.taxonomy.clear();
  c.templates.clear();
  c.assets.clear();
  c.curation.rule_table.clear();
  try {
    c.master_seed = doc.value("master_seed", std::uint64_t{12345});
    for (const auto& t : doc.at("taxonomy")) c.taxonomy.push_back(t);
    if (doc.contains("templates"))
      for (const auto& [scene_type, edges] : doc["templates"].items()) {
        for (const auto& e : edges) {
          if (!e.is_array() || e.size() != 2)
            throw ParseError("config.templates." + scene_type +
                             ": edge must be [parent, child]");
          c.templates[scene_type].push_back(
              {e[0].get<std::string>(), e[1].get<std::string>()});
        }
        c.templates.try_emplace(scene_type);
      }
    if (doc.contains("assets"))
      for (const auto& [cat, size] : doc["assets"].items())
        c.assets[cat] = vec3_from(size, "assets." + cat);
    if (doc.contains("curation")) {
      const auto& j = doc["curation"];
      c.curation.vertical_gap_max = j.value("vertical_gap_max", 0.03);
      c.curation.overlap_min = j.value("overlap_min", 0.5);
      c.curation.displacement_max = j.value("displacement_max", 0.10);
      c.curation.exclude_floor_only = j.value("exclude_floor_only", false);
      if (j.contains("rule_table"))
        for (const auto& r : j["rule_table"])
          c.curation.rule_table[{r.at("anchor").get<std::string>(),
                                 r.at("dependent").get<std::string>()}] =
              r.at("k_f").get<double>();
    }
    if (doc.contains("fit")) {
      const auto& j = doc["fit"];
      c.fit.components = j.value("components", 4);
      c.fit.lambda = j.value("lambda", 0.01);
      c.fit.min_count = j.value("min_count", 8);
      c.fit.tol = j.value("tol", 1e-5);
      c.fit.max_iters = j.value("max_iters", 60);
    }
    if (doc.contains("assembly")) {
      const auto& j = doc["assembly"];
      if (j.contains("boundary")) {
        c.boundary.lo = vec3_from(j["boundary"].at("min"), "assembly.boundary.min");
        c.boundary.hi = vec3_from(j["boundary"].at("max"), "assembly.boundary.max");
      }
      c.assembly.max_attempts = j.value("max_attempts", 64);
      c.assembly.gravity_enabled = j.value("gravity_enabled", true);
      c.assembly.rejection_enabled = j.value("rejection_enabled", true);
      c.assembly.cell_size = j.value("cell_size", 0.5);
      const std::string policy = j.value("failure_policy", "skip");
      if (policy == "skip")
        c.assembly.failure_policy = assembly::FailurePolicy::kSkip;
      else if (policy == "abort")
        c.assembly.failure_policy = assembly::FailurePolicy::kAbort;
      else
        throw ParseError("config.assembly.failure_policy: '" + policy +
                         "' is not skip|abort");
    }
    if (doc.contains("generation")) {
      const auto& j = doc["generation"];
      c.generation.scene_type = j.value("scene_type", "bedroom");
      c.generation.n_max = j.value("n_max", 8);
      c.generation.k = j.value("k", 1.0);
      c.generation.scene_count = j.value("scene_count", 10);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

EngineConfig load(const std::string& path) {
  EngineConfig c = from_json(read_file(path));
  validate(c);
  return c;
}

}  // namespace scenegen::config
