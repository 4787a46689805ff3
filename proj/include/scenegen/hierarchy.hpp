#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/rng.hpp"

namespace scenegen::hierarchy {

inline constexpr const char* kFloorId = "floor";
inline constexpr const char* kFloorCategory = "floor";

// "category_N" -> "category"; labels without the numeric suffix are their
// own category.
std::string category_of(const std::string& label);

// Floor-rooted physical support hierarchy. Node 0 is always the floor.
struct SupportTree {
  struct Node {
    std::string id;
    std::string category;
    int parent = -1;
    std::vector<int> children;  // insertion order
  };
  std::vector<Node> nodes;

  int index_of(const std::string& id) const;  // -1 when absent
  int add_node(const std::string& id, int parent);
};

// Semantic placement order among one anchor's support children; rooted at
// the anchor itself.
struct FunctionalTree {
  int anchor = -1;                        // support-tree node index
  std::map<int, int> parent;              // child -> parent (anchor has none)
  std::map<int, std::vector<int>> children;  // insertion order

  void add_edge(int from, int to);
};

struct HierarchySpec {
  SupportTree support;
  std::vector<FunctionalTree> functional;  // one per non-leaf support node

  const FunctionalTree* functional_for(int anchor) const;
};

// Cross-checks both trees; throws ValidationError naming the offender.
void validate(const HierarchySpec& spec);

// Occurrence statistics driving statistical hierarchy synthesis.
// sup_dep[anchor][dependent] counts support relations; func_dep[anchor]
// [functional-parent][candidate] counts functional co-occurrences on that
// anchor's surface.
struct StatTables {
  std::map<std::string, std::map<std::string, long long>> sup_dep;
  std::map<std::string, std::map<std::string, std::map<std::string, long long>>>
      func_dep;
};

// Scene-type seed trees: edges between instance labels, parents first.
using TemplateTable =
    std::map<std::string, std::vector<std::array<std::string, 2>>>;

// Minimal spec for the scene type; functional trees are star-shaped
// (children directly under their anchor). Throws UnknownSceneType /
// ValidationError (orphan edges).
HierarchySpec base_template(const std::string& scene_type,
                            const TemplateTable& templates);

// Statistical expansion: every functional-tree leaf may spawn candidates
// with probability min(1, k * freq / total); new nodes join both trees and
// re-enter the queue. Deterministic given the seed.
HierarchySpec generate(const std::string& scene_type,
                       const TemplateTable& templates, const StatTables& stats,
                       int n_max, double k, Rng& rng);

// One tuple per non-floor node: support parent as mandatory anchor,
// functional-tree parent as the optional anchor (absent when that parent is
// the anchor itself). BFS over the support tree, DFS per functional tree.
struct RelationalTuple {
  int dependent = -1;
  int support = -1;
  std::optional<int> functional;
};

std::vector<RelationalTuple> serialize(const HierarchySpec& spec);

// Interchange document: {"support_tree": [{parent, child}...],
// "functional_trees": [{support_anchor, edges}...]}. Functional-tree
// members missing from the support tree get the implied edge anchor->node;
// missing functional trees are completed as stars.
HierarchySpec parse_hierarchy(const std::string& json_text);
std::string hierarchy_to_json(const HierarchySpec& spec);

// Stats document round-trip ({"version", "sup_dep", "func_dep"}).
StatTables stats_from_json(const std::string& json_text);
std::string stats_to_json(const StatTables& stats);

}  // namespace scenegen::hierarchy
