#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "scenegen/io.hpp"
#include "scenegen/predictor.hpp"
#include "testsupport.hpp"

using namespace scenegen;
using namespace scenegen::predictor;
namespace ts = scenegen::testsupport;
using geometry::OrientedBox;

namespace {

OrientedBox canonical_cube() {
  return {{0, 0, 0}, {1, 1, 1}, geometry::Rotation6::identity()};
}

double max_abs_diff(const geometry::BoxVector& a, const geometry::BoxVector& b) {
  double m = 0.0;
  for (int d = 0; d < 12; ++d) m = std::max(m, std::abs(a[d] - b[d]));
  return m;
}

RelationKey key_of(const std::string& sup, const char* fnc,
                   const std::string& dep) {
  RelationKey k;
  k.support = sup;
  k.dependent = dep;
  if (fnc) k.functional = fnc;
  return k;
}

std::vector<RelationTupleRecord> synth_records(const RelationKey& key,
                                               const Vec3& local_offset,
                                               int count, Rng& rng) {
  std::vector<RelationTupleRecord> out;
  for (int i = 0; i < count; ++i) {
    OrientedBox sup;
    sup.center = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 1)};
    sup.size = {rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.2, 1.0)};
    sup.rotation = ts::random_rotation(rng);

    OrientedBox local;
    local.center = local_offset + Vec3{rng.uniform(-0.005, 0.005),
                                       rng.uniform(-0.005, 0.005),
                                       rng.uniform(-0.005, 0.005)};
    local.size = {0.2, 0.2, 0.2};
    local.rotation = geometry::Rotation6::identity();
    const OrientedBox dep = from_local(sup, geometry::to_box_vector(local));

    RelationTupleRecord rec;
    rec.support = {key.support, sup};
    rec.dependent = {key.dependent, dep};
    if (key.functional) rec.functional = ObjectRef{*key.functional, sup};
    rec.source_scene = "synthetic";
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

TEST_CASE("to_local: dependent equal to support maps to the canonical pose") {
  Rng rng(41);
  const OrientedBox sup = ts::random_box(rng, 0.5, 2.0, 1.0);
  const auto v = to_local(sup, sup);
  CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v[3] == doctest::Approx(1.0));
  CHECK(v[4] == doctest::Approx(1.0));
  CHECK(v[5] == doctest::Approx(1.0));
  CHECK(v[6] == doctest::Approx(1.0));
  CHECK(v[7] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(v[10] == doctest::Approx(1.0));
}

TEST_CASE("to_local: center above the support top") {
  OrientedBox sup;
  sup.center = {0, 0, 0.4};
  sup.size = {1, 1, 0.8};
  OrientedBox dep;
  dep.center = {0, 0, 0.85};  // 0.45 above the support center
  dep.size = {0.2, 0.2, 0.1};
  const auto v = to_local(sup, dep);
  CHECK(v[2] == doctest::Approx(0.5625));
}

TEST_CASE("to_local/from_local: exact inverses over random pairs") {
  Rng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const OrientedBox sup = ts::random_box(rng, 0.3, 2.0, 2.0);
    const OrientedBox dep = ts::random_box(rng, 0.1, 1.5, 2.0);
    const auto v = to_local(sup, dep);
    const OrientedBox back = from_local(sup, v);
    worst = std::max(worst, max_abs_diff(geometry::to_box_vector(back),
                                         geometry::to_box_vector(dep)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("from_local: degenerate support frame") {
  OrientedBox sup;
  sup.size = {1, 1, 0};
  geometry::BoxVector v{};
  v[3] = v[4] = v[5] = 0.5;
  v[6] = 1;
  v[10] = 1;
  CHECK_THROWS_AS(from_local(sup, v), DegenerateFrame);
}

TEST_CASE("fit_table: fixed local offset is recovered") {
  Rng rng(43);
  const auto key = key_of("table", nullptr, "lamp");
  const auto records = synth_records(key, {0.1, -0.2, 0.7}, 60, rng);
  FitTableOptions opts;
  opts.components = 1;
  opts.lambda = 0.0;
  const auto table = fit_table(records, opts);
  REQUIRE(table.entries.count(key) == 1);
  const auto& m = table.entries.at(key);
  CHECK(std::abs(m.components[0].mu[0] - 0.1) < 0.01);
  CHECK(std::abs(m.components[0].mu[1] + 0.2) < 0.01);
  CHECK(std::abs(m.components[0].mu[2] - 0.7) < 0.01);
}

TEST_CASE("fit_table: keyed groups and fallback behavior") {
  Rng rng(44);
  FitTableOptions opts;
  opts.components = 1;
  opts.min_count = 8;

  SUBCASE("two distinct keys give two entries") {
    auto records = synth_records(key_of("table", nullptr, "lamp"),
                                 {0, 0, 0.6}, 20, rng);
    const auto more = synth_records(key_of("shelf", nullptr, "book"),
                                    {0.1, 0, 0.5}, 20, rng);
    records.insert(records.end(), more.begin(), more.end());
    const auto table = fit_table(records, opts);
    CHECK(table.entries.size() == 2);
  }

  SUBCASE("undersized keyed group folds into the coarse key") {
    auto records = synth_records(key_of("table", "laptop", "mouse"),
                                 {0.2, 0, 0.55}, 5, rng);  // below min_count
    const auto more = synth_records(key_of("table", nullptr, "mouse"),
                                    {0.2, 0, 0.55}, 5, rng);
    records.insert(records.end(), more.begin(), more.end());
    const auto table = fit_table(records, opts);
    CHECK(table.entries.size() == 1);
    CHECK(table.entries.count(key_of("table", nullptr, "mouse")) == 1);
    // the refined query is still answerable through the fallback
    CHECK_NOTHROW(lookup(table, key_of("table", "laptop", "mouse")));
  }

  SUBCASE("key below min_count with no fallback data is absent") {
    const auto records = synth_records(key_of("table", nullptr, "lamp"),
                                       {0, 0, 0.6}, 5, rng);
    const auto table = fit_table(records, opts);
    CHECK(table.entries.empty());
    CHECK_THROWS_AS(lookup(table, key_of("table", nullptr, "lamp")),
                    UnknownRelation);
  }

  SUBCASE("functional-only data still answers the bare key") {
    const auto records = synth_records(key_of("floor", "bed", "nightstand"),
                                       {0.3, 0.1, 3.0}, 20, rng);
    const auto table = fit_table(records, opts);
    CHECK(table.entries.count(key_of("floor", "bed", "nightstand")) == 1);
    CHECK_NOTHROW(lookup(table, key_of("floor", nullptr, "nightstand")));
  }

  SUBCASE("empty input") {
    CHECK_THROWS_AS(fit_table({}, opts), InsufficientData);
  }
}

TEST_CASE("lookup: exact entry wins over the coarse fallback") {
  Rng rng(45);
  auto records = synth_records(key_of("desk", "laptop", "mouse"),
                               {0.25, 0, 0.55}, 30, rng);
  const auto more = synth_records(key_of("desk", nullptr, "mouse"),
                                  {-0.25, 0, 0.55}, 30, rng);
  records.insert(records.end(), more.begin(), more.end());
  FitTableOptions opts;
  opts.components = 1;
  const auto table = fit_table(records, opts);
  const auto& exact = lookup(table, key_of("desk", "laptop", "mouse"));
  CHECK(exact.components[0].mu[0] > 0.2);  // the +0.25 group, not the marginal
  const auto& coarse = lookup(table, key_of("desk", nullptr, "mouse"));
  CHECK(coarse.components[0].mu[0] < 0.0);
  CHECK_THROWS_AS(lookup(table, key_of("desk", nullptr, "plant")),
                  UnknownRelation);
}

TEST_CASE("predict: identity frame returns the stored mixture") {
  Rng rng(46);
  const auto key = key_of("table", nullptr, "lamp");
  const auto records = synth_records(key, {0.1, 0.2, 0.6}, 30, rng);
  FitTableOptions opts;
  opts.components = 2;
  const auto table = fit_table(records, opts);

  const auto world = predict(table, key, canonical_cube());
  const auto& local = table.entries.at(key);
  for (std::size_t k = 0; k < local.components.size(); ++k)
    for (int d = 0; d < 12; ++d) {
      CHECK(world.components[k].mu[d] ==
            doctest::Approx(local.components[k].mu[d]).epsilon(1e-9));
      CHECK(world.components[k].s[d] ==
            doctest::Approx(local.components[k].s[d]).epsilon(1e-9));
    }
}

TEST_CASE("predict: translation shifts the center locations") {
  Rng rng(47);
  const auto key = key_of("table", nullptr, "lamp");
  const auto table = fit_table(synth_records(key, {0.1, 0.2, 0.6}, 30, rng),
                               FitTableOptions{.components = 1});
  const auto base = predict(table, key, canonical_cube());
  OrientedBox moved = canonical_cube();
  const Vec3 t{1.5, -2.0, 0.25};
  moved.center = moved.center + t;
  const auto shifted = predict(table, key, moved);
  for (int d = 0; d < 3; ++d) {
    CHECK(shifted.components[0].mu[d] ==
          doctest::Approx(base.components[0].mu[d] + t[d]).epsilon(1e-9));
    CHECK(shifted.components[0].s[d] ==
          doctest::Approx(base.components[0].s[d]).epsilon(1e-9));
  }
  // rotation dimensions untouched by translation
  for (int d = 6; d < 12; ++d)
    CHECK(shifted.components[0].mu[d] ==
          doctest::Approx(base.components[0].mu[d]).epsilon(1e-9));
}

TEST_CASE("predict: doubling the support size doubles center/size parameters") {
  Rng rng(48);
  const auto key = key_of("table", nullptr, "lamp");
  const auto table = fit_table(synth_records(key, {0.1, 0.2, 0.6}, 30, rng),
                               FitTableOptions{.components = 1});
  const auto base = predict(table, key, canonical_cube());
  OrientedBox big = canonical_cube();
  big.size = {2, 2, 2};
  const auto scaled = predict(table, key, big);
  for (int d = 0; d < 6; ++d) {
    CHECK(scaled.components[0].mu[d] ==
          doctest::Approx(2.0 * base.components[0].mu[d]).epsilon(1e-9));
    CHECK(scaled.components[0].s[d] ==
          doctest::Approx(2.0 * base.components[0].s[d]).epsilon(1e-9));
  }
  for (int d = 6; d < 12; ++d)
    CHECK(scaled.components[0].s[d] ==
          doctest::Approx(base.components[0].s[d]).epsilon(1e-9));
}

TEST_CASE("equivariance: sampled boxes transform covariantly under rigid moves") {
  Rng rng(49);
  const auto key = key_of("table", nullptr, "lamp");
  const auto table = fit_table(synth_records(key, {0.1, -0.1, 0.7}, 40, rng),
                               FitTableOptions{.components = 2});
  const auto& local = lookup(table, key);

  for (int trial = 0; trial < 200; ++trial) {
    const OrientedBox sup = ts::random_box(rng, 0.5, 2.0, 1.0);
    // rigid transform g: rotation about a random axis plus a translation
    const Mat3 g_rot = geometry::rotation_to_matrix(ts::random_rotation(rng));
    const Vec3 g_t{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    OrientedBox moved = sup;
    moved.center = g_rot * sup.center + g_t;
    moved.rotation = geometry::matrix_to_rotation6(
        g_rot * geometry::rotation_to_matrix(sup.rotation));

    const std::uint64_t draw_seed = derive_seed(99, static_cast<std::uint64_t>(trial));
    Rng r1(draw_seed), r2(draw_seed);
    const OrientedBox via_moved = from_local(moved, mol::sample(local, r1));
    const OrientedBox direct = from_local(sup, mol::sample(local, r2));
    OrientedBox expected = direct;
    expected.center = g_rot * direct.center + g_t;
    expected.rotation = geometry::matrix_to_rotation6(
        g_rot * geometry::rotation_to_matrix(direct.rotation));

    CHECK(max_abs_diff(geometry::to_box_vector(via_moved),
                       geometry::to_box_vector(expected)) < 1e-6);
  }
}

TEST_CASE("predict: component center locations transform covariantly") {
  Rng rng(50);
  const auto key = key_of("table", nullptr, "lamp");
  const auto table = fit_table(synth_records(key, {0.1, -0.1, 0.7}, 40, rng),
                               FitTableOptions{.components = 1});
  const OrientedBox sup = ts::random_box(rng, 0.5, 2.0, 1.0);
  const Mat3 g_rot = geometry::rotation_to_matrix(ts::random_rotation(rng));
  const Vec3 g_t{0.5, 1.0, -0.3};
  OrientedBox moved = sup;
  moved.center = g_rot * sup.center + g_t;
  moved.rotation = geometry::matrix_to_rotation6(
      g_rot * geometry::rotation_to_matrix(sup.rotation));

  const auto before = predict(table, key, sup);
  const auto after = predict(table, key, moved);
  const Vec3 c{before.components[0].mu[0], before.components[0].mu[1],
               before.components[0].mu[2]};
  const Vec3 expected = g_rot * c + g_t;
  CHECK(after.components[0].mu[0] == doctest::Approx(expected.x).epsilon(1e-9));
  CHECK(after.components[0].mu[1] == doctest::Approx(expected.y).epsilon(1e-9));
  CHECK(after.components[0].mu[2] == doctest::Approx(expected.z).epsilon(1e-9));
}

TEST_CASE("snap_size keeps the asset aspect within the volume clamp") {
  const Vec3 asset{0.4, 0.2, 0.1};
  SUBCASE("matching volume is unchanged") {
    const Vec3 s = snap_size({0.2, 0.4, 0.1}, asset);  // same volume
    CHECK(s.x == doctest::Approx(0.4));
    CHECK(s.y == doctest::Approx(0.2));
  }
  SUBCASE("oversized sample clamps at +20%") {
    const Vec3 s = snap_size({4, 4, 4}, asset);
    CHECK(s.x == doctest::Approx(0.48));
    CHECK(s.z == doctest::Approx(0.12));
  }
  SUBCASE("undersized sample clamps at -20%") {
    const Vec3 s = snap_size({1e-3, 1e-3, 1e-3}, asset);
    CHECK(s.x == doctest::Approx(0.32));
  }
}

TEST_CASE("parameter file round trip and validation gates") {
  Rng rng(51);
  auto records = synth_records(key_of("desk", "laptop", "mouse"),
                               {0.25, 0, 0.55}, 30, rng);
  auto more = synth_records(key_of("floor", nullptr, "bed"), {0, 0, 3.0}, 30, rng);
  records.insert(records.end(), more.begin(), more.end());
  const auto table = fit_table(records, FitTableOptions{.components = 2});

  const auto dir = std::filesystem::temp_directory_path() / "scenegen_predictor_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "table.params").string();

  save_params(table, path);
  const auto loaded = load_params(path);
  REQUIRE(loaded.entries.size() == table.entries.size());
  CHECK(loaded.min_count == table.min_count);
  for (const auto& [key, m] : table.entries) {
    const auto& l = loaded.entries.at(key);
    REQUIRE(l.k() == m.k());
    for (int k = 0; k < m.k(); ++k) {
      CHECK(l.weights[static_cast<std::size_t>(k)] ==
            m.weights[static_cast<std::size_t>(k)]);  // bit-exact
      for (int d = 0; d < 12; ++d) {
        CHECK(l.components[static_cast<std::size_t>(k)].mu[d] ==
              m.components[static_cast<std::size_t>(k)].mu[d]);
        CHECK(l.components[static_cast<std::size_t>(k)].s[d] ==
              m.components[static_cast<std::size_t>(k)].s[d]);
      }
    }
  }
  // save -> load -> save is byte identical
  const std::string again = path + ".2";
  save_params(loaded, again);
  CHECK(read_file(path) == read_file(again));

  SUBCASE("weights off the simplex are rejected") {
    std::string text = read_file(path);
    const auto pos = text.find("component ");
    text.replace(pos, std::string("component ").size() + 3, "component 0.4");
    const std::string bad = path + ".bad";
    write_file_atomic(bad, text);
    CHECK_THROWS_AS(load_params(bad), ParseError);
  }
  SUBCASE("wrong version tag is rejected") {
    std::string text = read_file(path);
    text.replace(text.find(" 1\n"), 3, " 9\n");
    const std::string bad = path + ".badver";
    write_file_atomic(bad, text);
    CHECK_THROWS_AS(load_params(bad), ParseError);
  }
  SUBCASE("truncated file is rejected with a line diagnostic") {
    std::string text = read_file(path);
    text.resize(text.size() / 2);
    const std::string bad = path + ".trunc";
    write_file_atomic(bad, text);
    CHECK_THROWS_AS(load_params(bad), ParseError);
  }
}
