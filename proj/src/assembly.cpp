#include "scenegen/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace scenegen::assembly {

using geometry::OrientedBox;
using nlohmann::json;

OrientedBox floor_box(const Aabb& boundary) {
  OrientedBox b;
  const Vec3 ext = boundary.extent();
  b.size = {ext.x, ext.y, kFloorThickness};
  b.center = {boundary.lo.x + 0.5 * ext.x, boundary.lo.y + 0.5 * ext.y,
              boundary.lo.z - 0.5 * kFloorThickness};
  return b;
}

GridIndex::GridIndex(const Aabb& boundary, double cell_size)
    : x0_(boundary.lo.x), y0_(boundary.lo.y), cell_(std::max(cell_size, 1e-3)) {
  nx_ = std::max(1, static_cast<int>(std::ceil((boundary.hi.x - x0_) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((boundary.hi.y - y0_) / cell_)));
  cells_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
}

void GridIndex::cell_range(const OrientedBox& box, int& cx0, int& cx1, int& cy0,
                           int& cy1) const {
  double lx = 1e300, hx = -1e300, ly = 1e300, hy = -1e300;
  for (const Vec3& c : geometry::corners(box)) {
    lx = std::min(lx, c.x);
    hx = std::max(hx, c.x);
    ly = std::min(ly, c.y);
    hy = std::max(hy, c.y);
  }
  // clamped, so boxes straying outside the boundary land in edge cells
  cx0 = std::clamp(static_cast<int>(std::floor((lx - x0_) / cell_)), 0, nx_ - 1);
  cx1 = std::clamp(static_cast<int>(std::floor((hx - x0_) / cell_)), 0, nx_ - 1);
  cy0 = std::clamp(static_cast<int>(std::floor((ly - y0_) / cell_)), 0, ny_ - 1);
  cy1 = std::clamp(static_cast<int>(std::floor((hy - y0_) / cell_)), 0, ny_ - 1);
}

void GridIndex::insert(int id, const OrientedBox& box) {
  int cx0, cx1, cy0, cy1;
  cell_range(box, cx0, cx1, cy0, cy1);
  for (int cy = cy0; cy <= cy1; ++cy)
    for (int cx = cx0; cx <= cx1; ++cx)
      cells_[static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx_) +
             static_cast<std::size_t>(cx)]
          .push_back(id);
}

void GridIndex::query(const OrientedBox& box, std::vector<int>& out) const {
  out.clear();
  int cx0, cx1, cy0, cy1;
  cell_range(box, cx0, cx1, cy0, cy1);
  for (int cy = cy0; cy <= cy1; ++cy)
    for (int cx = cx0; cx <= cx1; ++cx) {
      const auto& cell =
          cells_[static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx_) +
                 static_cast<std::size_t>(cx)];
      out.insert(out.end(), cell.begin(), cell.end());
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

SceneState::SceneState(const Aabb& boundary, double cell_size)
    : boundary_(boundary), index_(boundary, cell_size) {}

void SceneState::add(std::string id, std::string category,
                     const OrientedBox& box) {
  index_.insert(static_cast<int>(placed_.size()), box);
  placed_.push_back({std::move(id), std::move(category), box});
}

const OrientedBox* SceneState::find(const std::string& id) const {
  for (const auto& p : placed_)
    if (p.id == id) return &p.box;
  return nullptr;
}

bool feasible(const OrientedBox& candidate, const SceneState& state) {
  if (!geometry::inside_boundary(candidate, state.boundary())) return false;
  std::vector<int> shortlist;
  state.index().query(candidate, shortlist);
  for (int i : shortlist)
    if (geometry::obb_intersects(candidate,
                                 state.placed()[static_cast<std::size_t>(i)].box))
      return false;
  return true;
}

bool feasible_bruteforce(const OrientedBox& candidate, const SceneState& state) {
  if (!geometry::inside_boundary(candidate, state.boundary())) return false;
  for (const auto& p : state.placed())
    if (geometry::obb_intersects(candidate, p.box)) return false;
  return true;
}

std::optional<OrientedBox> try_gravity_refine(const OrientedBox& candidate,
                                              const OrientedBox& support,
                                              const SceneState& state) {
  std::vector<const OrientedBox*> surfaces;
  surfaces.reserve(state.placed().size() + 1);
  surfaces.push_back(&support);
  for (const auto& p : state.placed()) surfaces.push_back(&p.box);

  const auto rest = geometry::highest_surface_below(candidate, surfaces);
  if (!rest) return std::nullopt;
  const double dz = *rest - geometry::bottom_surface_height(candidate);
  if (std::abs(dz) <= geometry::kContactEps) return candidate;  // already resting
  OrientedBox out = candidate;
  out.center.z += dz;
  return out;
}

OrientedBox gravity_refine(const OrientedBox& candidate,
                           const OrientedBox& support, const SceneState& state) {
  auto settled = try_gravity_refine(candidate, support, state);
  if (!settled)
    throw NoSupportBelow("gravity refinement: no surface beneath footprint");
  return *settled;
}

PlaceResult place_one(const PlaceRequest& req,
                      const predictor::PredictorTable& table,
                      const SceneState& state, const AssemblyConfig& config,
                      Rng& rng) {
  const mol::MixtureOfLogistics& local = predictor::lookup(table, req.key);

  PlaceResult result;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    result.attempts = attempt;
    const geometry::BoxVector v = mol::sample(local, rng);
    OrientedBox box;
    try {
      box = predictor::from_local(req.support, v);
    } catch (const DegenerateRotation&) {
      continue;  // vanishingly rare tail draw; counts as a rejection
    }
    box.size = predictor::snap_size(box.size, req.asset_size);

    if (config.rejection_enabled && !feasible(box, state)) continue;
    if (config.gravity_enabled) {
      const auto settled = try_gravity_refine(box, req.support, state);
      if (!settled) continue;
      if (config.rejection_enabled && !feasible(*settled, state)) continue;
      box = *settled;
    }
    result.box = box;
    return result;
  }
  return result;
}

std::pair<Scene, PlacementReport> assemble(const hierarchy::HierarchySpec& spec,
                                           const predictor::PredictorTable& table,
                                           const AssetLibrary& assets,
                                           const Aabb& boundary,
                                           const AssemblyConfig& config) {
  SceneState state(boundary, config.cell_size);
  state.add(hierarchy::kFloorId, hierarchy::kFloorCategory, floor_box(boundary));

  Scene scene;
  scene.boundary = boundary;
  PlacementReport report;
  Rng rng(config.seed);

  const auto tuples = hierarchy::serialize(spec);
  std::set<int> skipped;
  for (const auto& t : tuples) {
    const auto& nodes = spec.support.nodes;
    const auto& dep = nodes[static_cast<std::size_t>(t.dependent)];
    const auto& sup = nodes[static_cast<std::size_t>(t.support)];

    auto fail = [&](int attempts) {
      report.objects.push_back({dep.id, attempts, false});
      report.proposals += attempts;
      ++report.failed;
      skipped.insert(t.dependent);
      if (config.failure_policy == FailurePolicy::kAbort)
        throw PlacementAborted("could not place '" + dep.id + "' (support '" +
                               sup.id + "')");
    };

    if (skipped.count(t.support)) {  // anchor never made it into the scene
      fail(0);
      continue;
    }
    const OrientedBox* support_box = state.find(sup.id);
    if (!support_box)
      throw ValidationError("serialized tuple uses unplaced anchor '" + sup.id +
                            "'");

    const auto asset = assets.find(dep.category);
    if (asset == assets.end())
      throw ValidationError("asset library has no category '" + dep.category +
                            "'");

    PlaceRequest req;
    req.key.support = sup.category;
    req.key.dependent = dep.category;
    if (t.functional)
      req.key.functional =
          nodes[static_cast<std::size_t>(*t.functional)].category;
    req.support = *support_box;
    req.asset_size = asset->second;

    const PlaceResult placed = place_one(req, table, state, config, rng);
    if (!placed.box) {
      fail(placed.attempts);
      continue;
    }
    report.objects.push_back({dep.id, placed.attempts, true});
    report.proposals += placed.attempts;
    ++report.accepted;
    state.add(dep.id, dep.category, *placed.box);

    SceneObject obj;
    obj.id = dep.id;
    obj.category = dep.category;
    obj.box = *placed.box;
    obj.support_id = sup.id;
    if (t.functional)
      obj.functional_id = nodes[static_cast<std::size_t>(*t.functional)].id;
    scene.objects.push_back(std::move(obj));
  }

  report.acceptance_rate =
      report.proposals > 0
          ? static_cast<double>(report.accepted) / report.proposals
          : 0.0;
  if (report.accepted > 0) {
    long long resamples = 0;
    for (const auto& o : report.objects)
      if (o.accepted) resamples += o.attempts - 1;
    report.resamples_per_object =
        static_cast<double>(resamples) / report.accepted;
  }
  return {std::move(scene), std::move(report)};
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json box_to_json(const OrientedBox& b) {
  return {{"center", vec3_to_json(b.center)},
          {"size", vec3_to_json(b.size)},
          {"rotation",
           json::array({b.rotation.a1.x, b.rotation.a1.y, b.rotation.a1.z,
                        b.rotation.a2.x, b.rotation.a2.y, b.rotation.a2.z})}};
}

OrientedBox box_from_json(const json& j) {
  OrientedBox b;
  b.center = vec3_from_json(j.at("center"));
  b.size = vec3_from_json(j.at("size"));
  const auto& r = j.at("rotation");
  if (!r.is_array() || r.size() != 6)
    throw ParseError("expected 6-vector rotation");
  b.rotation.a1 = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
  b.rotation.a2 = {r[3].get<double>(), r[4].get<double>(), r[5].get<double>()};
  return b;
}

}  // namespace

std::string scene_to_json(const Scene& scene, const PlacementReport& report) {
  json doc;
  doc["version"] = 1;
  doc["boundary"] = {{"min", vec3_to_json(scene.boundary.lo)},
                     {"max", vec3_to_json(scene.boundary.hi)}};
  doc["objects"] = json::array();
  for (const auto& o : scene.objects) {
    json j = box_to_json(o.box);
    j["id"] = o.id;
    j["category"] = o.category;
    j["support"] = o.support_id;
    j["functional"] = o.functional_id ? json(*o.functional_id) : json(nullptr);
    doc["objects"].push_back(std::move(j));
  }
  json rep;
  rep["proposals"] = report.proposals;
  rep["accepted"] = report.accepted;
  rep["failed"] = report.failed;
  rep["acceptance_rate"] = report.acceptance_rate;
  rep["resamples_per_object"] = report.resamples_per_object;
  rep["objects"] = json::array();
  for (const auto& o : report.objects)
    rep["objects"].push_back(
        {{"id", o.id}, {"attempts", o.attempts}, {"accepted", o.accepted}});
  doc["report"] = std::move(rep);
  return doc.dump(2) + "\n";
}

std::pair<Scene, PlacementReport> scene_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene document: ") + e.what());
  }
  try {
    Scene scene;
    scene.boundary.lo = vec3_from_json(doc.at("boundary").at("min"));
    scene.boundary.hi = vec3_from_json(doc.at("boundary").at("max"));
    for (const auto& j : doc.at("objects")) {
      SceneObject o;
      o.box = box_from_json(j);
      o.id = j.at("id").get<std::string>();
      o.category = j.at("category").get<std::string>();
      o.support_id = j.at("support").get<std::string>();
      if (j.contains("functional") && !j.at("functional").is_null())
        o.functional_id = j.at("functional").get<std::string>();
      scene.objects.push_back(std::move(o));
    }
    PlacementReport report;
    if (doc.contains("report")) {
      const auto& rep = doc["report"];
      report.proposals = rep.value("proposals", 0);
      report.accepted = rep.value("accepted", 0);
      report.failed = rep.value("failed", 0);
      report.acceptance_rate = rep.value("acceptance_rate", 0.0);
      report.resamples_per_object = rep.value("resamples_per_object", 0.0);
      if (rep.contains("objects"))
        for (const auto& j : rep["objects"])
          report.objects.push_back({j.at("id").get<std::string>(),
                                    j.at("attempts").get<int>(),
                                    j.at("accepted").get<bool>()});
    }
    return {std::move(scene), std::move(report)};
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene document: ") + e.what());
  }
}

std::string scene_to_obj(const Scene& scene) {
  std::ostringstream os;
  os << "# scenegen box mesh\n";
  int base = 0;
  auto emit = [&](const std::string& id, const OrientedBox& box) {
    os << "o " << id << "\n";
    char buf[96];
    for (const Vec3& c : geometry::corners(box)) {
      std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", c.x, c.y, c.z);
      os << buf;
    }
    // corners are ordered (-,-,-),(-,-,+),(-,+,-),(-,+,+),(+,-,-),...
    static const int faces[12][3] = {{1, 2, 3}, {3, 2, 4}, {5, 7, 6}, {6, 7, 8},
                                     {1, 5, 2}, {2, 5, 6}, {3, 4, 7}, {7, 4, 8},
                                     {1, 3, 5}, {5, 3, 7}, {2, 6, 4}, {4, 6, 8}};
    for (const auto& f : faces)
      os << "f " << base + f[0] << " " << base + f[1] << " " << base + f[2]
         << "\n";
    base += 8;
  };
  emit("floor", floor_box(scene.boundary));
  for (const auto& o : scene.objects) emit(o.id, o.box);
  return os.str();
}

}  // namespace scenegen::assembly
