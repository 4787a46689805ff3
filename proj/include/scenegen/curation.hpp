#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scenegen/geometry.hpp"
#include "scenegen/hierarchy.hpp"
#include "scenegen/records.hpp"

namespace scenegen::curation {

struct RawObject {
  std::string id;
  std::string category;
  geometry::OrientedBox box;
};

struct RawScene {
  std::string id;
  Aabb boundary;
  std::vector<RawObject> objects;
};

struct CurationConfig {
  double vertical_gap_max = 0.03;   // contact tolerance for support extraction
  double overlap_min = 0.5;         // footprint containment threshold
  double displacement_max = 0.10;   // settle displacement filter
  bool exclude_floor_only = false;
  // (anchor category, dependent category) -> expansion factor k_f
  std::map<std::pair<std::string, std::string>, double> rule_table;
};

struct ValidationStats {
  std::size_t objects_in = 0;
  std::size_t dropped_unstable = 0;      // no surface or over-displaced
  std::size_t dropped_intersecting = 0;  // still colliding after settling
};

// Settles objects bottom-up onto the best surface below, removes over-
// displaced or still-intersecting ones, and repeats until stable, so the
// operation is idempotent.
RawScene physical_validate(const RawScene& scene, double displacement_max,
                           ValidationStats* stats = nullptr);

// One (support id, dependent id) pair per object; "floor" when nothing
// qualifies. Candidates need |gap| <= eps_v and footprint overlap >= tau_h;
// the largest overlap wins, ties broken by the higher surface, then the
// smaller footprint.
std::vector<std::pair<std::string, std::string>> extract_support(
    const RawScene& scene, double eps_v, double tau_h);

// Rule-gated functional pairs among objects sharing a support surface: the
// dependent's centroid must fall inside the anchor's box expanded by the
// rule's k_f. At most one anchor per dependent (nearest centroid).
std::vector<std::pair<std::string, std::string>> distill_functional(
    const RawScene& scene,
    const std::vector<std::pair<std::string, std::string>>& support_pairs,
    const std::map<std::pair<std::string, std::string>, double>& rule_table);

hierarchy::StatTables build_stats(const std::vector<RelationTupleRecord>& records);

struct StageReport {
  std::size_t scenes_in = 0;
  std::size_t scenes_dropped_floor_only = 0;
  std::size_t objects_in = 0;
  std::size_t objects_dropped_unstable = 0;
  std::size_t objects_dropped_intersecting = 0;
  std::size_t support_pairs = 0;
  std::size_t functional_pairs = 0;
  std::size_t records_out = 0;
};

struct CurationResult {
  std::vector<RelationTupleRecord> records;
  hierarchy::StatTables stats;
  StageReport report;
};

// Full pipeline: validate -> extract -> distill -> records -> stats.
// Scenes are processed independently (parallel across scenes); the merge is
// in input order, so results do not depend on the thread count.
CurationResult curate(const std::vector<RawScene>& scenes,
                      const CurationConfig& config, int threads = 1);

// Corpus document: {"version", "scenes": [...]}. Throws ParseError /
// ValidationError (duplicate ids).
std::vector<RawScene> scenes_from_json(const std::string& text);
std::string scenes_to_json(const std::vector<RawScene>& scenes);

// Line-delimited records, one JSON object per line, stable field order.
std::string records_to_jsonl(const std::vector<RelationTupleRecord>& records);
std::vector<RelationTupleRecord> records_from_jsonl(const std::string& text);

}  // namespace scenegen::curation
