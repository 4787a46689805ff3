#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "scenegen/curation.hpp"
#include "testsupport.hpp"

using namespace scenegen;
using namespace scenegen::curation;
namespace ts = scenegen::testsupport;
using geometry::OrientedBox;

namespace {

OrientedBox axis_aligned(Vec3 center, Vec3 size) {
  return {center, size, geometry::Rotation6::identity()};
}

RawScene desk_scene() {
  RawScene s;
  s.id = "desk_scene";
  s.boundary = {{0, 0, 0}, {4, 4, 3}};
  s.objects.push_back({"desk", "desk", axis_aligned({2, 2, 0.375}, {1.4, 0.7, 0.75})});
  return s;
}

}  // namespace

TEST_CASE("physical_validate: small float snaps down, big float is removed") {
  RawScene s = desk_scene();
  // 0.02 above the desk top (0.75)
  s.objects.push_back({"book", "book", axis_aligned({2, 2, 0.785}, {0.2, 0.28, 0.03})});
  // 0.5 above the floor, nothing else beneath
  s.objects.push_back({"mug", "mug", axis_aligned({0.5, 0.5, 0.55}, {0.09, 0.09, 0.1})});

  ValidationStats stats;
  const RawScene out = physical_validate(s, 0.10, &stats);
  REQUIRE(out.objects.size() == 2);
  CHECK(out.objects[0].id == "desk");
  CHECK(out.objects[1].id == "book");
  CHECK(geometry::bottom_surface_height(out.objects[1].box) ==
        doctest::Approx(0.75));
  CHECK(stats.dropped_unstable == 1);
}

TEST_CASE("physical_validate: idempotent") {
  Rng rng(81);
  const auto cfg = config::default_config();
  const auto built = ts::assemble_fixture(5, 321, true, true, cfg,
                                          ts::bootstrap_table(cfg),
                                          ts::bedroom_stats());
  for (std::size_t i = 0; i < built.size(); ++i) {
    const RawScene raw = ts::to_raw_scene(built[i].scene, "s" + std::to_string(i));
    const RawScene once = physical_validate(raw, 0.10);
    const RawScene twice = physical_validate(once, 0.10);
    REQUIRE(once.objects.size() == twice.objects.size());
    for (std::size_t j = 0; j < once.objects.size(); ++j) {
      CHECK(once.objects[j].id == twice.objects[j].id);
      CHECK(once.objects[j].box.center.z ==
            doctest::Approx(twice.objects[j].box.center.z).epsilon(1e-12));
    }
  }
}

TEST_CASE("physical_validate: interpenetrating survivors are removed") {
  RawScene s = desk_scene();
  s.objects.push_back({"crate_a", "crate", axis_aligned({0.8, 0.8, 0.25}, {0.5, 0.5, 0.5})});
  s.objects.push_back({"crate_b", "crate", axis_aligned({1.0, 0.8, 0.25}, {0.5, 0.5, 0.5})});
  ValidationStats stats;
  const RawScene out = physical_validate(s, 0.10, &stats);
  CHECK(out.objects.size() == 1);  // just the desk
  CHECK(stats.dropped_intersecting == 2);
}

TEST_CASE("extract_support: resting object maps to its surface") {
  RawScene s = desk_scene();
  s.objects.push_back({"book", "book", axis_aligned({2, 2, 0.765}, {0.2, 0.28, 0.03})});
  const auto pairs = extract_support(s, 0.03, 0.5);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::string, std::string>{"floor", "desk"});
  CHECK(pairs[1] == std::pair<std::string, std::string>{"desk", "book"});
}

TEST_CASE("extract_support: straddling object picks the larger overlap") {
  RawScene s;
  s.id = "straddle";
  s.boundary = {{0, 0, 0}, {6, 4, 3}};
  // two tables side by side, tops level at 0.75
  s.objects.push_back({"table_a", "table", axis_aligned({1.5, 2, 0.375}, {1.0, 1.0, 0.75})});
  s.objects.push_back({"table_b", "table", axis_aligned({2.5, 2, 0.375}, {1.0, 1.0, 0.75})});
  // board overlapping 60% onto table_a, 40% onto table_b
  s.objects.push_back({"board", "board", axis_aligned({1.9, 2, 0.765}, {1.0, 0.5, 0.03})});
  const auto pairs = extract_support(s, 0.03, 0.3);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[2] == std::pair<std::string, std::string>{"table_a", "board"});
}

TEST_CASE("extract_support: nothing beneath means the floor") {
  RawScene s;
  s.id = "floor_case";
  s.boundary = {{0, 0, 0}, {4, 4, 3}};
  s.objects.push_back({"rug", "rug", axis_aligned({2, 2, 0.005}, {1.5, 1.0, 0.01})});
  const auto pairs = extract_support(s, 0.03, 0.5);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].first == "floor");
}

TEST_CASE("distill_functional: k-check arithmetic") {
  RawScene s = desk_scene();
  // laptop on the desk; keyboard 0.30 m along x from it
  s.objects.push_back({"laptop", "laptop",
                       axis_aligned({1.8, 2, 0.765}, {0.35, 0.25, 0.03})});
  s.objects.push_back({"keyboard", "keyboard",
                       axis_aligned({2.1, 2, 0.765}, {0.45, 0.15, 0.03})});
  const auto support = extract_support(s, 0.03, 0.5);

  SUBCASE("offset inside the expanded half-extents is emitted") {
    std::map<std::pair<std::string, std::string>, double> rules{
        {{"laptop", "keyboard"}, 3.0}};  // half-extents (0.525, 0.375, 0.045)
    const auto fnc = distill_functional(s, support, rules);
    REQUIRE(fnc.size() == 1);
    CHECK(fnc[0] == std::pair<std::string, std::string>{"laptop", "keyboard"});
  }
  SUBCASE("too small an expansion fails the k-check") {
    // half-extents (0.2625, ...) < 0.30 offset
    std::map<std::pair<std::string, std::string>, double> rules{
        {{"laptop", "keyboard"}, 1.5}};
    CHECK(distill_functional(s, support, rules).empty());
  }
  SUBCASE("no rule entry, never emitted") {
    CHECK(distill_functional(s, support, {}).empty());
  }
}

TEST_CASE("distill_functional: nearest passing anchor wins") {
  RawScene s = desk_scene();
  s.objects.push_back({"laptop_near", "laptop",
                       axis_aligned({1.9, 2, 0.765}, {0.35, 0.25, 0.03})});
  s.objects.push_back({"laptop_far", "laptop",
                       axis_aligned({2.3, 2, 0.765}, {0.35, 0.25, 0.03})});
  s.objects.push_back({"mouse", "mouse",
                       axis_aligned({2.0, 2.1, 0.77}, {0.07, 0.11, 0.04})});
  const auto support = extract_support(s, 0.03, 0.5);
  std::map<std::pair<std::string, std::string>, double> rules{
      {{"laptop", "mouse"}, 6.0}};
  const auto fnc = distill_functional(s, support, rules);
  REQUIRE(fnc.size() == 1);
  CHECK(fnc[0].first == "laptop_near");
  CHECK(fnc[0].second == "mouse");
}

TEST_CASE("build_stats: counting matches a brute-force tally") {
  Rng rng(82);
  const std::vector<std::string> sups{"floor", "desk", "shelf"};
  const std::vector<std::string> deps{"book", "mug", "lamp"};
  std::vector<RelationTupleRecord> records;
  std::map<std::string, std::map<std::string, long long>> sup_tally;
  std::map<std::string, std::map<std::string, std::map<std::string, long long>>> func_tally;
  const OrientedBox box = axis_aligned({0, 0, 0.5}, {1, 1, 1});
  for (int i = 0; i < 100; ++i) {
    RelationTupleRecord r;
    r.support = {sups[rng.index(sups.size())], box};
    r.dependent = {deps[rng.index(deps.size())], box};
    if (rng.uniform() < 0.4) r.functional = ObjectRef{deps[rng.index(deps.size())], box};
    r.source_scene = "tally";
    ++sup_tally[r.support.category][r.dependent.category];
    if (r.functional)
      ++func_tally[r.support.category][r.functional->category][r.dependent.category];
    records.push_back(std::move(r));
  }
  const auto stats = build_stats(records);
  CHECK(stats.sup_dep == sup_tally);
  CHECK(stats.func_dep == func_tally);
  CHECK(build_stats({}).sup_dep.empty());

  SUBCASE("single-key case") {
    std::vector<RelationTupleRecord> ten;
    for (int i = 0; i < 10; ++i) {
      RelationTupleRecord r;
      r.support = {"table", box};
      r.dependent = {"laptop", box};
      ten.push_back(std::move(r));
    }
    CHECK(build_stats(ten).sup_dep.at("table").at("laptop") == 10);
  }
}

TEST_CASE("curate: recovers the relations it was built from") {
  const auto cfg = config::default_config();
  const auto built = ts::assemble_fixture(20, 4242, true, true, cfg,
                                          ts::bootstrap_table(cfg),
                                          ts::bedroom_stats());
  std::vector<RawScene> raw;
  std::set<std::pair<std::string, std::string>> truth;  // (scene/sup, dep)
  for (std::size_t i = 0; i < built.size(); ++i) {
    const std::string id = "scene_" + std::to_string(i);
    raw.push_back(ts::to_raw_scene(built[i].scene, id));
    for (const auto& o : built[i].scene.objects)
      truth.insert({id + "/" + o.support_id, o.id});
  }

  const auto result = curate(raw, cfg.curation);
  CHECK(result.report.scenes_in == raw.size());
  CHECK(result.report.records_out == result.records.size());

  // reconstruct extracted pairs per scene for recall/precision
  std::set<std::pair<std::string, std::string>> extracted;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto validated = physical_validate(raw[i], cfg.curation.displacement_max);
    const auto pairs = extract_support(validated, cfg.curation.vertical_gap_max,
                                       cfg.curation.overlap_min);
    std::map<std::string, std::string> cat;  // id -> support id
    for (const auto& [sup, dep] : pairs)
      extracted.insert({raw[i].id + "/" + sup, dep});
  }
  std::size_t hit = 0;
  for (const auto& t : truth) hit += extracted.count(t);
  const double recall = static_cast<double>(hit) / truth.size();
  std::size_t correct = 0;
  for (const auto& e : extracted) correct += truth.count(e);
  const double precision = static_cast<double>(correct) / extracted.size();
  CHECK(recall >= 0.95);
  CHECK(precision >= 0.95);

  // every emitted functional pair satisfies the k-check, re-evaluated
  for (const auto& rec : result.records) {
    if (!rec.functional) continue;
    const auto rule =
        cfg.curation.rule_table.find({rec.functional->category, rec.dependent.category});
    REQUIRE(rule != cfg.curation.rule_table.end());
    CHECK(geometry::contains_point(
        geometry::expand_box(rec.functional->box, rule->second),
        rec.dependent.box.center));
  }
}

TEST_CASE("curate: empty corpus, duplicate ids, floor-only exclusion") {
  const auto cfg = config::default_config();
  SUBCASE("empty corpus") {
    const auto result = curate({}, cfg.curation);
    CHECK(result.records.empty());
    CHECK(result.stats.sup_dep.empty());
  }
  SUBCASE("corpus of empty scenes") {
    std::vector<RawScene> scenes(3);
    scenes[0].id = "a";
    scenes[1].id = "b";
    scenes[2].id = "c";
    for (auto& s : scenes) s.boundary = {{0, 0, 0}, {4, 4, 3}};
    const auto result = curate(scenes, cfg.curation);
    CHECK(result.records.empty());
  }
  SUBCASE("duplicate scene ids are rejected at ingest") {
    std::vector<RawScene> scenes(2);
    scenes[0].id = scenes[1].id = "dup";
    CHECK_THROWS_AS(curate(scenes, cfg.curation), ValidationError);
  }
  SUBCASE("floor-only scenes can be excluded") {
    RawScene s;
    s.id = "just_floor";
    s.boundary = {{0, 0, 0}, {4, 4, 3}};
    s.objects.push_back({"rug", "rug", axis_aligned({2, 2, 0.005}, {1, 1, 0.01})});
    CurationConfig on = cfg.curation;
    on.exclude_floor_only = true;
    const auto excluded = curate({s}, on);
    CHECK(excluded.records.empty());
    CHECK(excluded.report.scenes_dropped_floor_only == 1);
    const auto kept = curate({s}, cfg.curation);
    CHECK(kept.records.size() == 1);
  }
}

TEST_CASE("curate: thread-count independent") {
  const auto cfg = config::default_config();
  const auto built = ts::assemble_fixture(10, 555, true, true, cfg,
                                          ts::bootstrap_table(cfg),
                                          ts::bedroom_stats());
  std::vector<RawScene> raw;
  for (std::size_t i = 0; i < built.size(); ++i)
    raw.push_back(ts::to_raw_scene(built[i].scene, "s" + std::to_string(i)));
  const auto serial = curate(raw, cfg.curation, 1);
  const auto parallel = curate(raw, cfg.curation, 0);
  CHECK(records_to_jsonl(serial.records) == records_to_jsonl(parallel.records));
  CHECK(hierarchy::stats_to_json(serial.stats) ==
        hierarchy::stats_to_json(parallel.stats));
}

TEST_CASE("corpus and records documents round trip") {
  const auto cfg = config::default_config();
  const auto built = ts::assemble_fixture(3, 31, true, true, cfg,
                                          ts::bootstrap_table(cfg),
                                          ts::bedroom_stats());
  std::vector<RawScene> raw;
  for (std::size_t i = 0; i < built.size(); ++i)
    raw.push_back(ts::to_raw_scene(built[i].scene, "s" + std::to_string(i)));

  const std::string corpus = scenes_to_json(raw);
  const auto back = scenes_from_json(corpus);
  CHECK(scenes_to_json(back) == corpus);

  const auto result = curate(raw, cfg.curation);
  const std::string jsonl = records_to_jsonl(result.records);
  const auto records_back = records_from_jsonl(jsonl);
  CHECK(records_to_jsonl(records_back) == jsonl);

  SUBCASE("duplicate object ids in a scene are rejected") {
    std::string bad = corpus;
    // duplicate the first object id by renaming the second occurrence
    const auto doc = scenes_to_json(raw);
    RawScene s = back[0];
    REQUIRE(s.objects.size() >= 2);
    s.objects[1].id = s.objects[0].id;
    CHECK_THROWS_AS(scenes_from_json(scenes_to_json({s})), ValidationError);
  }
  SUBCASE("malformed records line carries its number") {
    CHECK_THROWS_AS(records_from_jsonl("{\"not\": \"a record\"}\n"), ParseError);
  }
}
