#pragma once

#include <array>
#include <optional>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/vec.hpp"

namespace scenegen::geometry {

// Tolerance for touching-face and boundary-inclusion decisions.
inline constexpr double kContactEps = 1e-9;

// First two columns of a rotation matrix, prior to orthonormalization.
struct Rotation6 {
  Vec3 a1{1, 0, 0};
  Vec3 a2{0, 1, 0};

  static Rotation6 identity() { return {}; }
};

// Object pose: center (m), full extents (m), continuous rotation.
struct OrientedBox {
  Vec3 center;
  Vec3 size;
  Rotation6 rotation;
};

// Flattened [center(3), size(3), rotation(6)] vector the density model
// operates on.
using BoxVector = std::array<double, 12>;

BoxVector to_box_vector(const OrientedBox& b);
OrientedBox from_box_vector(const BoxVector& v);

// Gram-Schmidt orthonormalization; det(R) = +1.
// Throws DegenerateRotation on zero or parallel inputs.
Mat3 rotation_to_matrix(const Rotation6& r);

// First two columns of R.
Rotation6 matrix_to_rotation6(const Mat3& r);

// Corner set (8 points) in world coordinates.
std::array<Vec3, 8> corners(const OrientedBox& b);

double volume(const OrientedBox& b);

// Interior intersection via the separating-axis test (15 candidate axes).
// Touching faces (separation within kContactEps) count as non-intersecting.
bool obb_intersects(const OrientedBox& a, const OrientedBox& b);

// Scale all extents by k about an unchanged center. k must be > 0.
OrientedBox expand_box(const OrientedBox& b, double k);

// Max / min vertical (z) coordinate over the corners.
double top_surface_height(const OrientedBox& b);
double bottom_surface_height(const OrientedBox& b);

// Ground-plane footprint: convex hull of the corner projections,
// counter-clockwise.
std::vector<std::array<double, 2>> footprint(const OrientedBox& b);

double footprint_area(const OrientedBox& b);

// Intersection area of the two footprints divided by the footprint area of
// `upper`; in [0, 1].
double horizontal_overlap_ratio(const OrientedBox& lower,
                                const OrientedBox& upper);

// Inclusive containment (boundary counts, within kContactEps).
bool contains_point(const OrientedBox& b, const Vec3& p);

bool inside_boundary(const OrientedBox& b, const Aabb& boundary);

// Convex polygon helpers (exposed for the footprint math and its tests).
double polygon_area(const std::vector<std::array<double, 2>>& poly);
std::vector<std::array<double, 2>> convex_clip(
    const std::vector<std::array<double, 2>>& subject,
    const std::vector<std::array<double, 2>>& clip);

// Highest top surface among `surfaces` that overlaps the candidate's
// footprint and whose top lies at or below the candidate's bottom plus
// `penetration_tol`. Returns the resting height, or nothing if no surface
// qualifies. Gravity refinement and the settle pass are both built on this.
std::optional<double> highest_surface_below(
    const OrientedBox& candidate, const std::vector<const OrientedBox*>& surfaces,
    double penetration_tol = kContactEps);

}  // namespace scenegen::geometry
