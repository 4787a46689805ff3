#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenegen/geometry.hpp"
#include "scenegen/mol.hpp"
#include "scenegen/records.hpp"

namespace scenegen::predictor {

// Conditioning context, discretized by category labels.
struct RelationKey {
  std::string support;
  std::optional<std::string> functional;
  std::string dependent;

  auto operator<=>(const RelationKey&) const = default;
};

std::string to_string(const RelationKey& key);

// Affine map taking the support box to the canonical cube [-0.5, 0.5]^3.
struct LocalFrame {
  Vec3 origin;
  Mat3 rotation;
  Vec3 inv_scale;  // 1 / support size, per axis
};

LocalFrame local_frame(const geometry::OrientedBox& support);  // DegenerateFrame

// Dependent pose expressed in the support's canonical-cube frame:
// center through the frame, size per-axis relative, rotation relative
// (re-encoded as the matrix's first two columns).
geometry::BoxVector to_local(const geometry::OrientedBox& support,
                             const geometry::OrientedBox& dep);

// Exact inverse of to_local; output rotation re-orthonormalized.
geometry::OrientedBox from_local(const geometry::OrientedBox& support,
                                 const geometry::BoxVector& v);

struct PredictorTable {
  std::map<RelationKey, mol::MixtureOfLogistics> entries;
  int min_count = 8;
};

struct FitTableOptions {
  int components = 4;
  double lambda = 0.01;
  int min_count = 8;
  mol::FitOptions em{};
  std::uint64_t seed = 0;
  int threads = 1;  // keys fit independently; results identical for any value
};

struct KeyFitInfo {
  RelationKey key;
  std::size_t count = 0;
  double mean_nll = 0.0;
};

// Groups tuples by key, transforms dependents into the support's local
// frame, and runs EM per group of size >= min_count. Undersized keyed
// groups fall back into the coarsened key with the functional label
// dropped. Throws InsufficientData on empty input.
PredictorTable fit_table(const std::vector<RelationTupleRecord>& tuples,
                         const FitTableOptions& opts,
                         std::vector<KeyFitInfo>* info = nullptr);

// Exact key, then the functional-dropped fallback. Throws UnknownRelation.
const mol::MixtureOfLogistics& lookup(const PredictorTable& table,
                                      const RelationKey& key);

// World-frame view of the stored local mixture for a concrete support:
// component locations pass through from_local's affine action; scales are
// multiplied by the per-axis frame scale for center/size dimensions and
// left unchanged for rotation dimensions.
mol::MixtureOfLogistics predict(const PredictorTable& table,
                                const RelationKey& key,
                                const geometry::OrientedBox& support);

// Sampled size is replaced by the asset's canonical size uniformly rescaled
// to the sampled volume, with the rescale factor clamped to [0.8, 1.2].
Vec3 snap_size(const Vec3& sampled, const Vec3& asset);

// Parameter file: version header, min_count, then per entry a key line
// (three labels, "-" for an absent functional anchor) and the mixture block.
// Round-trips bit-exactly (17 significant digits).
void save_params(const PredictorTable& table, const std::string& path);
PredictorTable load_params(const std::string& path);  // ParseError

}  // namespace scenegen::predictor
