#pragma once

#include <optional>
#include <string>

#include "scenegen/geometry.hpp"

namespace scenegen {

struct ObjectRef {
  std::string category;
  geometry::OrientedBox box;
};

// One curated relation: dependent plus its anchors, with world-frame boxes.
struct RelationTupleRecord {
  ObjectRef dependent;
  ObjectRef support;
  std::optional<ObjectRef> functional;
  std::string source_scene;
};

}  // namespace scenegen
