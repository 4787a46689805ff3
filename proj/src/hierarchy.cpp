#include "scenegen/hierarchy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>

#include <json.hpp>

namespace scenegen::hierarchy {

using nlohmann::json;

std::string category_of(const std::string& label) {
  const auto pos = label.rfind('_');
  if (pos == std::string::npos || pos + 1 >= label.size()) return label;
  for (std::size_t i = pos + 1; i < label.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(label[i]))) return label;
  return label.substr(0, pos);
}

int SupportTree::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

int SupportTree::add_node(const std::string& id, int parent) {
  Node n;
  n.id = id;
  n.category = category_of(id);
  n.parent = parent;
  nodes.push_back(std::move(n));
  const int idx = static_cast<int>(nodes.size()) - 1;
  if (parent >= 0) nodes[static_cast<std::size_t>(parent)].children.push_back(idx);
  return idx;
}

void FunctionalTree::add_edge(int from, int to) {
  parent[to] = from;
  children[from].push_back(to);
}

const FunctionalTree* HierarchySpec::functional_for(int anchor) const {
  for (const auto& t : functional)
    if (t.anchor == anchor) return &t;
  return nullptr;
}

void validate(const HierarchySpec& spec) {
  const auto& tree = spec.support;
  if (tree.nodes.empty() || tree.nodes[0].id != kFloorId ||
      tree.nodes[0].parent != -1)
    throw ValidationError("support tree must be rooted at the floor");

  const int n = static_cast<int>(tree.nodes.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = tree.nodes[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j)
      if (tree.nodes[static_cast<std::size_t>(j)].id == node.id)
        throw ValidationError("duplicate node id '" + node.id + "'");
    if (i > 0 && (node.parent < 0 || node.parent >= n))
      throw ValidationError("node '" + node.id + "' is not grounded");
  }

  // reachability from the floor (catches cycles and orphans)
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int c : tree.nodes[static_cast<std::size_t>(u)].children) {
      if (c < 0 || c >= n || tree.nodes[static_cast<std::size_t>(c)].parent != u)
        throw ValidationError("inconsistent child link under '" +
                              tree.nodes[static_cast<std::size_t>(u)].id + "'");
      if (seen[static_cast<std::size_t>(c)])
        throw ValidationError("cycle at node '" +
                              tree.nodes[static_cast<std::size_t>(c)].id + "'");
      seen[static_cast<std::size_t>(c)] = 1;
      queue.push_back(c);
    }
  }
  for (int i = 0; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw ValidationError("node '" + tree.nodes[static_cast<std::size_t>(i)].id +
                            "' is not grounded back to the floor");

  // functional trees: exactly one per non-leaf node, covering its children
  for (int i = 0; i < n; ++i) {
    const auto& node = tree.nodes[static_cast<std::size_t>(i)];
    const FunctionalTree* ft = spec.functional_for(i);
    if (node.children.empty()) {
      if (ft)
        throw ValidationError("functional tree anchored at leaf '" + node.id + "'");
      continue;
    }
    if (!ft)
      throw ValidationError("missing functional tree for anchor '" + node.id + "'");
    std::size_t members = 0;
    for (const auto& [child, parent] : ft->parent) {
      if (child == ft->anchor)
        throw ValidationError("functional edge into anchor '" + node.id + "'");
      if (std::find(node.children.begin(), node.children.end(), child) ==
          node.children.end())
        throw ValidationError(
            "functional tree of '" + node.id + "' contains node '" +
            tree.nodes[static_cast<std::size_t>(child)].id +
            "' with a different support parent");
      if (parent != ft->anchor &&
          std::find(node.children.begin(), node.children.end(), parent) ==
              node.children.end())
        throw ValidationError("functional parent outside surface of '" +
                              node.id + "'");
      ++members;
    }
    if (members != node.children.size())
      throw ValidationError("functional tree of '" + node.id +
                            "' does not cover all supported children");
    // each member reachable from the anchor (no cycles among siblings)
    std::vector<int> stack{ft->anchor};
    std::size_t reached = 0;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      auto it = ft->children.find(u);
      if (it == ft->children.end()) continue;
      for (int c : it->second) {
        ++reached;
        stack.push_back(c);
      }
    }
    if (reached != members)
      throw ValidationError("functional tree of '" + node.id +
                            "' has a cycle or disconnected node");
  }
}

namespace {

// Star tree: every child hangs directly off the anchor.
FunctionalTree star_tree(const SupportTree& tree, int anchor) {
  FunctionalTree ft;
  ft.anchor = anchor;
  for (int c : tree.nodes[static_cast<std::size_t>(anchor)].children)
    ft.add_edge(anchor, c);
  return ft;
}

}  // namespace

HierarchySpec base_template(const std::string& scene_type,
                            const TemplateTable& templates) {
  const auto it = templates.find(scene_type);
  if (it == templates.end())
    throw UnknownSceneType("unknown scene type '" + scene_type + "'");

  HierarchySpec spec;
  spec.support.add_node(kFloorId, -1);
  for (const auto& edge : it->second) {
    const int parent = spec.support.index_of(edge[0]);
    if (parent < 0)
      throw ValidationError("template edge parent '" + edge[0] +
                            "' not defined before use");
    if (spec.support.index_of(edge[1]) >= 0)
      throw ValidationError("template node '" + edge[1] + "' has two parents");
    spec.support.add_node(edge[1], parent);
  }
  for (std::size_t i = 0; i < spec.support.nodes.size(); ++i)
    if (!spec.support.nodes[i].children.empty())
      spec.functional.push_back(star_tree(spec.support, static_cast<int>(i)));
  validate(spec);
  return spec;
}

HierarchySpec generate(const std::string& scene_type,
                       const TemplateTable& templates, const StatTables& stats,
                       int n_max, double k, Rng& rng) {
  HierarchySpec spec = base_template(scene_type, templates);

  // instance counters so generated labels never collide
  std::map<std::string, int> counts;
  for (const auto& node : spec.support.nodes) {
    const std::string cat = node.category;
    int reserved = 0;
    if (node.id.size() > cat.size())
      reserved = std::stoi(node.id.substr(cat.size() + 1)) + 1;
    counts[cat] = std::max(counts[cat], reserved);
  }
  auto unique_label = [&](const std::string& cat) {
    std::string label;
    do {
      label = cat + "_" + std::to_string(counts[cat]++);
    } while (spec.support.index_of(label) >= 0);
    return label;
  };

  // queue of (leaf, anchor) pairs, seeded from every functional tree
  std::deque<std::array<int, 2>> queue;
  for (const auto& ft : spec.functional) {
    std::vector<int> order{ft.anchor};
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto it = ft.children.find(order[i]);
      if (it == ft.children.end()) {
        if (order[i] != ft.anchor) queue.push_back({order[i], ft.anchor});
        continue;
      }
      for (int c : it->second) order.push_back(c);
    }
  }

  int added = 0;
  while (!queue.empty() && added < n_max) {
    const auto [leaf, anchor] = queue.front();
    queue.pop_front();
    const std::string& anc_cat =
        spec.support.nodes[static_cast<std::size_t>(anchor)].category;
    const std::string& leaf_cat =
        spec.support.nodes[static_cast<std::size_t>(leaf)].category;

    const auto sup_it = stats.sup_dep.find(anc_cat);
    if (sup_it == stats.sup_dep.end()) continue;
    const auto freq_it = sup_it->second.find(leaf_cat);
    if (freq_it == sup_it->second.end() || freq_it->second <= 0) continue;
    const double total = static_cast<double>(freq_it->second);

    const auto fd_anchor = stats.func_dep.find(anc_cat);
    if (fd_anchor == stats.func_dep.end()) continue;
    const auto cand_it = fd_anchor->second.find(leaf_cat);
    if (cand_it == fd_anchor->second.end()) continue;

    for (const auto& [cand_cat, cand_freq] : cand_it->second) {
      const double p =
          std::clamp(k * static_cast<double>(cand_freq) / total, 0.0, 1.0);
      const double draw = rng.uniform();
      if (draw < p && added < n_max) {
        const int new_node = spec.support.add_node(unique_label(cand_cat), anchor);
        for (auto& ft : spec.functional)
          if (ft.anchor == anchor) ft.add_edge(leaf, new_node);
        queue.push_back({new_node, anchor});
        ++added;
      }
    }
  }
  validate(spec);
  return spec;
}

std::vector<RelationalTuple> serialize(const HierarchySpec& spec) {
  validate(spec);
  std::vector<RelationalTuple> out;
  out.reserve(spec.support.nodes.size() - 1);

  std::deque<int> bfs{0};
  while (!bfs.empty()) {
    const int u = bfs.front();
    bfs.pop_front();
    for (int c : spec.support.nodes[static_cast<std::size_t>(u)].children)
      bfs.push_back(c);

    const FunctionalTree* ft = spec.functional_for(u);
    if (!ft) continue;
    // preorder DFS, children in insertion order
    std::vector<std::pair<int, std::size_t>> stack{{ft->anchor, 0}};
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto kids = ft->children.find(node);
      if (kids == ft->children.end() || next >= kids->second.size()) {
        stack.pop_back();
        continue;
      }
      const int child = kids->second[next++];
      RelationalTuple t;
      t.dependent = child;
      t.support = u;
      if (node != ft->anchor) t.functional = node;
      out.push_back(t);
      stack.push_back({child, 0});
    }
  }
  return out;
}

namespace {

bool is_floor_label(const std::string& s) {
  if (s.size() != 5) return false;
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "floor";
}

std::string canon(const std::string& s) { return is_floor_label(s) ? kFloorId : s; }

}  // namespace

HierarchySpec parse_hierarchy(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("hierarchy document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("support_tree") ||
      !doc["support_tree"].is_array())
    throw ParseError("hierarchy document: missing 'support_tree' array");
  if (doc.contains("version") && doc["version"] != 1)
    throw ParseError("hierarchy document: unsupported version");

  struct Edge {
    std::string parent, child;
  };
  std::vector<Edge> sup_edges;
  for (const auto& e : doc["support_tree"]) {
    if (!e.is_object() || !e.contains("parent") || !e.contains("child"))
      throw ParseError("support_tree: edge needs 'parent' and 'child'");
    sup_edges.push_back({canon(e["parent"].get<std::string>()),
                         canon(e["child"].get<std::string>())});
  }

  HierarchySpec spec;
  spec.support.add_node(kFloorId, -1);

  // Two passes so edges may arrive in any order.
  std::map<std::string, std::string> parent_of;
  std::vector<std::string> child_order;
  for (const auto& e : sup_edges) {
    if (e.child == kFloorId)
      throw ValidationError("support edge makes the floor a child");
    if (parent_of.count(e.child))
      throw ValidationError("node '" + e.child + "' has multiple parents");
    parent_of[e.child] = e.parent;
    child_order.push_back(e.child);
  }
  // attach children whose parents are already present until stable
  std::vector<char> placed(child_order.size(), 0);
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t i = 0; i < child_order.size(); ++i) {
      if (placed[i]) continue;
      const int p = spec.support.index_of(parent_of[child_order[i]]);
      if (p < 0) continue;
      if (spec.support.index_of(child_order[i]) >= 0)
        throw ValidationError("duplicate node '" + child_order[i] + "'");
      spec.support.add_node(child_order[i], p);
      placed[i] = 1;
      progress = true;
    }
  }
  for (std::size_t i = 0; i < child_order.size(); ++i)
    if (!placed[i])
      throw ValidationError("node '" + child_order[i] +
                            "' is not grounded back to the floor");

  // functional trees
  std::vector<char> has_tree(spec.support.nodes.size() + 64, 0);
  if (doc.contains("functional_trees")) {
    if (!doc["functional_trees"].is_array())
      throw ParseError("'functional_trees' must be an array");
    for (const auto& t : doc["functional_trees"]) {
      if (!t.is_object() || !t.contains("support_anchor") ||
          !t.contains("edges") || !t["edges"].is_array())
        throw ParseError("functional tree needs 'support_anchor' and 'edges'");
      const std::string anchor_id = canon(t["support_anchor"].get<std::string>());
      const int anchor = spec.support.index_of(anchor_id);
      if (anchor < 0)
        throw ValidationError("functional tree anchor '" + anchor_id +
                              "' is not in the support tree");
      // an empty tree for a childless anchor carries no information
      if (t["edges"].empty() &&
          spec.support.nodes[static_cast<std::size_t>(anchor)].children.empty())
        continue;

      FunctionalTree ft;
      ft.anchor = anchor;
      auto member = [&](const std::string& label) {
        int idx = spec.support.index_of(label);
        if (idx < 0) {
          // referenced only on this surface: implied support edge
          idx = spec.support.add_node(label, anchor);
        } else if (idx != anchor &&
                   spec.support.nodes[static_cast<std::size_t>(idx)].parent !=
                       anchor) {
          throw ValidationError("functional edge references '" + label +
                                "' which is supported by a different surface");
        }
        return idx;
      };
      for (const auto& e : t["edges"]) {
        if (!e.is_object() || !e.contains("parent") || !e.contains("child"))
          throw ParseError("functional edge needs 'parent' and 'child'");
        const int p = member(canon(e["parent"].get<std::string>()));
        const int c = member(canon(e["child"].get<std::string>()));
        if (c == anchor)
          throw ValidationError("functional edge into anchor '" + anchor_id + "'");
        if (ft.parent.count(c))
          throw ValidationError(
              "node '" + spec.support.nodes[static_cast<std::size_t>(c)].id +
              "' appears twice as a functional child");
        ft.add_edge(p, c);
      }
      // children of the anchor not mentioned hang directly off the anchor
      for (int c : spec.support.nodes[static_cast<std::size_t>(anchor)].children)
        if (!ft.parent.count(c)) ft.add_edge(anchor, c);

      if (static_cast<std::size_t>(anchor) >= has_tree.size())
        has_tree.resize(static_cast<std::size_t>(anchor) + 1, 0);
      if (has_tree[static_cast<std::size_t>(anchor)])
        throw ValidationError("two functional trees anchored at '" + anchor_id + "'");
      has_tree[static_cast<std::size_t>(anchor)] = 1;
      spec.functional.push_back(std::move(ft));
    }
  }
  for (std::size_t i = 0; i < spec.support.nodes.size(); ++i)
    if (!spec.support.nodes[i].children.empty() &&
        (i >= has_tree.size() || !has_tree[i]))
      spec.functional.push_back(star_tree(spec.support, static_cast<int>(i)));

  validate(spec);
  return spec;
}

std::string hierarchy_to_json(const HierarchySpec& spec) {
  json doc;
  doc["version"] = 1;
  doc["support_tree"] = json::array();
  for (std::size_t i = 1; i < spec.support.nodes.size(); ++i) {
    const auto& node = spec.support.nodes[i];
    doc["support_tree"].push_back(
        {{"parent", spec.support.nodes[static_cast<std::size_t>(node.parent)].id},
         {"child", node.id}});
  }
  doc["functional_trees"] = json::array();
  for (const auto& ft : spec.functional) {
    json t;
    t["support_anchor"] =
        spec.support.nodes[static_cast<std::size_t>(ft.anchor)].id;
    t["edges"] = json::array();
    std::vector<int> order{ft.anchor};
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto it = ft.children.find(order[i]);
      if (it == ft.children.end()) continue;
      for (int c : it->second) {
        t["edges"].push_back(
            {{"parent", spec.support.nodes[static_cast<std::size_t>(order[i])].id},
             {"child", spec.support.nodes[static_cast<std::size_t>(c)].id}});
        order.push_back(c);
      }
    }
    doc["functional_trees"].push_back(std::move(t));
  }
  return doc.dump(2) + "\n";
}

StatTables stats_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("stats document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sup_dep") || !doc.contains("func_dep"))
    throw ParseError("stats document: missing 'sup_dep' / 'func_dep'");
  if (doc.contains("version") && doc["version"] != 1)
    throw ParseError("stats document: unsupported version");
  StatTables stats;
  for (const auto& [anchor, deps] : doc["sup_dep"].items())
    for (const auto& [dep, count] : deps.items()) {
      if (!count.is_number_integer() || count.get<long long>() < 0)
        throw ParseError("sup_dep[" + anchor + "][" + dep + "]: bad count");
      stats.sup_dep[anchor][dep] = count.get<long long>();
    }
  for (const auto& [anchor, leaves] : doc["func_dep"].items())
    for (const auto& [leaf, cands] : leaves.items())
      for (const auto& [cand, count] : cands.items()) {
        if (!count.is_number_integer() || count.get<long long>() < 0)
          throw ParseError("func_dep[" + anchor + "][" + leaf + "][" + cand +
                           "]: bad count");
        stats.func_dep[anchor][leaf][cand] = count.get<long long>();
      }
  return stats;
}

std::string stats_to_json(const StatTables& stats) {
  json doc;
  doc["version"] = 1;
  doc["sup_dep"] = json::object();
  for (const auto& [anchor, deps] : stats.sup_dep)
    for (const auto& [dep, count] : deps) doc["sup_dep"][anchor][dep] = count;
  doc["func_dep"] = json::object();
  for (const auto& [anchor, leaves] : stats.func_dep)
    for (const auto& [leaf, cands] : leaves)
      for (const auto& [cand, count] : cands)
        doc["func_dep"][anchor][leaf][cand] = count;
  return doc.dump(2) + "\n";
}

}  // namespace scenegen::hierarchy
