#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scenegen/geometry.hpp"
#include "scenegen/hierarchy.hpp"
#include "scenegen/predictor.hpp"
#include "scenegen/rng.hpp"

namespace scenegen::assembly {

inline constexpr double kFloorThickness = 0.1;

// Axis-aligned slab spanning the room's footprint; top face at boundary
// z-min. The one floor convention shared by assembly, curation and eval.
geometry::OrientedBox floor_box(const Aabb& boundary);

// Uniform xy grid over the boundary. Cells hold indices of inserted boxes;
// the shortlist is a superset of the true overlap set.
class GridIndex {
 public:
  GridIndex(const Aabb& boundary, double cell_size);

  void insert(int id, const geometry::OrientedBox& box);
  // sorted, deduplicated candidate ids
  void query(const geometry::OrientedBox& box, std::vector<int>& out) const;

 private:
  double x0_, y0_, cell_;
  int nx_, ny_;
  std::vector<std::vector<int>> cells_;

  void cell_range(const geometry::OrientedBox& box, int& cx0, int& cx1,
                  int& cy0, int& cy1) const;
};

struct PlacedInstance {
  std::string id;
  std::string category;
  geometry::OrientedBox box;
};

// Scene under construction: placed instances (floor first), boundary, and
// the spatial index used by feasibility checks.
class SceneState {
 public:
  SceneState(const Aabb& boundary, double cell_size = 0.5);

  void add(std::string id, std::string category, const geometry::OrientedBox& box);

  const Aabb& boundary() const { return boundary_; }
  const std::vector<PlacedInstance>& placed() const { return placed_; }
  const GridIndex& index() const { return index_; }
  const geometry::OrientedBox* find(const std::string& id) const;

 private:
  Aabb boundary_;
  std::vector<PlacedInstance> placed_;
  GridIndex index_;
};

// True iff the candidate intersects no placed box (grid shortlist, then the
// exact test) and lies fully inside the boundary.
bool feasible(const geometry::OrientedBox& candidate, const SceneState& state);

// Serial all-pairs reference for the same predicate; kept for tests and the
// benchmark.
bool feasible_bruteforce(const geometry::OrientedBox& candidate,
                         const SceneState& state);

// Drop (or lift) the candidate so its bottom face rests on the highest top
// surface beneath its footprint among {support} + placed boxes. Horizontal
// pose unchanged.
std::optional<geometry::OrientedBox> try_gravity_refine(
    const geometry::OrientedBox& candidate, const geometry::OrientedBox& support,
    const SceneState& state);

// Throwing variant (NoSupportBelow) matching the module contract.
geometry::OrientedBox gravity_refine(const geometry::OrientedBox& candidate,
                                     const geometry::OrientedBox& support,
                                     const SceneState& state);

enum class FailurePolicy { kSkip, kAbort };

struct AssemblyConfig {
  int max_attempts = 64;
  std::uint64_t seed = 0;
  bool gravity_enabled = true;
  bool rejection_enabled = true;
  FailurePolicy failure_policy = FailurePolicy::kSkip;
  double cell_size = 0.5;
};

struct PlaceRequest {
  predictor::RelationKey key;
  geometry::OrientedBox support;
  Vec3 asset_size;
};

struct PlaceResult {
  std::optional<geometry::OrientedBox> box;  // empty on failure
  int attempts = 0;
};

// Rejection-sampling loop: draw from the key's local mixture, decode into
// the support frame, snap size, test feasibility, settle under gravity,
// re-test. Throws UnknownRelation if the key has no entry.
PlaceResult place_one(const PlaceRequest& req,
                      const predictor::PredictorTable& table,
                      const SceneState& state, const AssemblyConfig& config,
                      Rng& rng);

struct SceneObject {
  std::string id;
  std::string category;
  geometry::OrientedBox box;
  std::string support_id;
  std::optional<std::string> functional_id;
};

// Assembled scene; the floor is implicit (reconstructed from the boundary).
struct Scene {
  Aabb boundary;
  std::vector<SceneObject> objects;
};

struct PlacementOutcome {
  std::string id;
  int attempts = 0;
  bool accepted = false;
};

struct PlacementReport {
  std::vector<PlacementOutcome> objects;
  int proposals = 0;
  int accepted = 0;
  int failed = 0;
  double acceptance_rate = 0.0;
  double resamples_per_object = 0.0;
};

// Raised when failure_policy is kAbort and an object cannot be placed.
struct PlacementAborted : Error {
  using Error::Error;
};

using AssetLibrary = std::map<std::string, Vec3>;  // category -> canonical size

// Serializes the spec and places every tuple in order. Deterministic given
// config.seed. Skipped objects (skip policy) cascade to their dependents.
std::pair<Scene, PlacementReport> assemble(
    const hierarchy::HierarchySpec& spec, const predictor::PredictorTable& table,
    const AssetLibrary& assets, const Aabb& boundary,
    const AssemblyConfig& config);

// Scene document round-trip (boundary, ordered object records, report).
std::string scene_to_json(const Scene& scene, const PlacementReport& report);
std::pair<Scene, PlacementReport> scene_from_json(const std::string& text);

// Cuboid-per-object triangle mesh in Wavefront OBJ form.
std::string scene_to_obj(const Scene& scene);

}  // namespace scenegen::assembly
