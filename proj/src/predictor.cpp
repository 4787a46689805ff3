#include "scenegen/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scenegen/parallel.hpp"
#include "scenegen/rng.hpp"

namespace scenegen::predictor {

using geometry::BoxVector;
using geometry::OrientedBox;

std::string to_string(const RelationKey& key) {
  return key.support + "|" + (key.functional ? *key.functional : "-") + "|" +
         key.dependent;
}

LocalFrame local_frame(const OrientedBox& support) {
  constexpr double kMinExtent = 1e-9;
  if (support.size.x < kMinExtent || support.size.y < kMinExtent ||
      support.size.z < kMinExtent)
    throw DegenerateFrame("local_frame: support box has a zero extent");
  LocalFrame f;
  f.origin = support.center;
  f.rotation = geometry::rotation_to_matrix(support.rotation);
  f.inv_scale = {1.0 / support.size.x, 1.0 / support.size.y,
                 1.0 / support.size.z};
  return f;
}

BoxVector to_local(const OrientedBox& support, const OrientedBox& dep) {
  const LocalFrame f = local_frame(support);
  const Vec3 c = f.inv_scale.cmul(f.rotation.tmul(dep.center - f.origin));
  const Vec3 s = dep.size.cmul(f.inv_scale);
  const Mat3 rel =
      f.rotation.transposed() * geometry::rotation_to_matrix(dep.rotation);
  OrientedBox local;
  local.center = c;
  local.size = s;
  local.rotation = geometry::matrix_to_rotation6(rel);
  return geometry::to_box_vector(local);
}

OrientedBox from_local(const OrientedBox& support, const BoxVector& v) {
  const LocalFrame f = local_frame(support);
  const OrientedBox local = geometry::from_box_vector(v);
  OrientedBox out;
  out.center = f.origin + f.rotation * local.center.cmul(support.size);
  out.size = local.size.cmul(support.size);
  // sampled sizes live on an unbounded scale; keep the box valid
  out.size = {std::max(out.size.x, 1e-9), std::max(out.size.y, 1e-9),
              std::max(out.size.z, 1e-9)};
  const Mat3 world_rot =
      f.rotation * geometry::rotation_to_matrix(local.rotation);
  out.rotation = geometry::matrix_to_rotation6(world_rot);
  return out;
}

PredictorTable fit_table(const std::vector<RelationTupleRecord>& tuples,
                         const FitTableOptions& opts,
                         std::vector<KeyFitInfo>* info) {
  if (tuples.empty()) throw InsufficientData("fit_table: no tuples");

  const auto key_of = [](const RelationTupleRecord& t) {
    RelationKey k;
    k.support = t.support.category;
    k.dependent = t.dependent.category;
    if (t.functional) k.functional = t.functional->category;
    return k;
  };

  // First pass: count exact keys so undersized keyed groups can be folded
  // into their coarse key before any fitting happens.
  std::map<RelationKey, std::size_t> counts;
  for (const auto& t : tuples) ++counts[key_of(t)];

  std::map<RelationKey, std::vector<BoxVector>> groups;
  for (const auto& t : tuples) {
    RelationKey k = key_of(t);
    if (k.functional &&
        counts[k] < static_cast<std::size_t>(opts.min_count))
      k.functional.reset();
    groups[k].push_back(to_local(t.support.box, t.dependent.box));
  }

  // Second tier: when nearly every tuple of some (support, dependent) pair
  // carries a functional label, the bare key would stay below min_count even
  // though the serializer can query it. For those pairs, fit the marginal
  // over functional anchors instead.
  std::map<RelationKey, std::vector<BoxVector>> marginals;
  for (const auto& t : tuples) {
    RelationKey coarse = key_of(t);
    coarse.functional.reset();
    const auto existing = groups.find(coarse);
    if (existing != groups.end() &&
        existing->second.size() >= static_cast<std::size_t>(opts.min_count))
      continue;
    marginals[coarse].push_back(to_local(t.support.box, t.dependent.box));
  }
  for (auto& [key, samples] : marginals)
    if (samples.size() >= static_cast<std::size_t>(opts.min_count))
      groups[key] = std::move(samples);

  std::vector<std::pair<RelationKey, const std::vector<BoxVector>*>> work;
  for (const auto& [key, samples] : groups)
    if (samples.size() >= static_cast<std::size_t>(opts.min_count))
      work.emplace_back(key, &samples);

  std::vector<mol::MixtureOfLogistics> fitted(work.size());
  std::vector<KeyFitInfo> infos(work.size());
  parallel_for(static_cast<int>(work.size()), opts.threads, [&](int i) {
    const auto& [key, samples] = work[static_cast<std::size_t>(i)];
    const int k = std::min<int>(opts.components,
                                static_cast<int>(samples->size()));
    Rng rng(derive_seed(opts.seed, to_string(key)));
    fitted[static_cast<std::size_t>(i)] =
        mol::fit_em(*samples, k, opts.lambda, rng, opts.em);
    double nll_sum = 0.0;
    for (const auto& x : *samples)
      nll_sum += mol::nll(fitted[static_cast<std::size_t>(i)], x);
    infos[static_cast<std::size_t>(i)] = {
        key, samples->size(), nll_sum / static_cast<double>(samples->size())};
  });

  PredictorTable table;
  table.min_count = opts.min_count;
  for (std::size_t i = 0; i < work.size(); ++i)
    table.entries.emplace(work[i].first, std::move(fitted[i]));
  if (info) *info = std::move(infos);
  return table;
}

const mol::MixtureOfLogistics& lookup(const PredictorTable& table,
                                      const RelationKey& key) {
  auto it = table.entries.find(key);
  if (it != table.entries.end()) return it->second;
  if (key.functional) {
    RelationKey coarse = key;
    coarse.functional.reset();
    it = table.entries.find(coarse);
    if (it != table.entries.end()) return it->second;
  }
  throw UnknownRelation("no predictor entry for key " + to_string(key));
}

mol::MixtureOfLogistics predict(const PredictorTable& table,
                                const RelationKey& key,
                                const OrientedBox& support) {
  const mol::MixtureOfLogistics& local = lookup(table, key);
  const LocalFrame f = local_frame(support);

  mol::MixtureOfLogistics world = local;
  for (auto& comp : world.components) {
    const Vec3 c{comp.mu[0], comp.mu[1], comp.mu[2]};
    const Vec3 cw = f.origin + f.rotation * c.cmul(support.size);
    comp.mu[0] = cw.x;
    comp.mu[1] = cw.y;
    comp.mu[2] = cw.z;
    for (int d = 0; d < 3; ++d) {
      comp.mu[3 + d] *= support.size[d];
      comp.s[d] *= support.size[d];
      comp.s[3 + d] *= support.size[d];
    }
    // rotation location: relative rotation composed with the frame's
    geometry::Rotation6 rel{{comp.mu[6], comp.mu[7], comp.mu[8]},
                            {comp.mu[9], comp.mu[10], comp.mu[11]}};
    try {
      const Mat3 rw = f.rotation * geometry::rotation_to_matrix(rel);
      const geometry::Rotation6 enc = geometry::matrix_to_rotation6(rw);
      comp.mu[6] = enc.a1.x;
      comp.mu[7] = enc.a1.y;
      comp.mu[8] = enc.a1.z;
      comp.mu[9] = enc.a2.x;
      comp.mu[10] = enc.a2.y;
      comp.mu[11] = enc.a2.z;
    } catch (const DegenerateRotation&) {
      // a fitted location can in principle average out degenerate; leave it
    }
  }
  return world;
}

Vec3 snap_size(const Vec3& sampled, const Vec3& asset) {
  const double vs =
      std::max(sampled.x, 1e-9) * std::max(sampled.y, 1e-9) * std::max(sampled.z, 1e-9);
  const double va = asset.x * asset.y * asset.z;
  const double f = std::clamp(std::cbrt(vs / va), 0.8, 1.2);
  return asset * f;
}

namespace {

constexpr const char* kMagic = "scenegen-params";
constexpr int kVersion = 1;

void check_label(const std::string& label) {
  if (label.empty() || label == "-" ||
      label.find_first_of(" \t\r\n") != std::string::npos)
    throw ValidationError("invalid category label '" + label + "'");
}

}  // namespace

void save_params(const PredictorTable& table, const std::string& path) {
  std::ostringstream os;
  os << kMagic << " " << kVersion << "\n";
  os << "min_count " << table.min_count << "\n";
  os << "entries " << table.entries.size() << "\n";
  for (const auto& [key, mixture] : table.entries) {
    check_label(key.support);
    check_label(key.dependent);
    if (key.functional) check_label(*key.functional);
    os << "key " << key.support << " "
       << (key.functional ? *key.functional : "-") << " " << key.dependent
       << "\n";
    mol::write_mixture(os, mixture);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << os.str();
}

PredictorTable load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string line;
  auto next = [&]() -> std::string {
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    fail("unexpected end of file");
    return {};
  };

  {
    std::istringstream head(next());
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kMagic)
      fail("not a parameter file (bad magic)");
    if (version != kVersion)
      fail("unsupported version " + std::to_string(version));
  }
  PredictorTable table;
  std::size_t n_entries = 0;
  {
    std::istringstream l(next());
    std::string tag;
    if (!(l >> tag >> table.min_count) || tag != "min_count")
      fail("expected 'min_count <n>'");
    std::istringstream e(next());
    if (!(e >> tag >> n_entries) || tag != "entries")
      fail("expected 'entries <n>'");
  }
  for (std::size_t i = 0; i < n_entries; ++i) {
    std::istringstream kl(next());
    std::string tag, sup, fnc, dep;
    if (!(kl >> tag >> sup >> fnc >> dep) || tag != "key")
      fail("expected 'key <support> <functional|-> <dependent>'");
    RelationKey key;
    key.support = sup;
    key.dependent = dep;
    if (fnc != "-") key.functional = fnc;
    mol::MixtureOfLogistics m;
    try {
      m = mol::read_mixture(is, line_no);
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + e.what());
    }
    if (!table.entries.emplace(std::move(key), std::move(m)).second)
      fail("duplicate key");
  }
  return table;
}

}  // namespace scenegen::predictor
