#include "scenegen/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace scenegen::geometry {

namespace {
constexpr double kDegenerate = 1e-12;
}

BoxVector to_box_vector(const OrientedBox& b) {
  return {b.center.x,      b.center.y,      b.center.z,      b.size.x,
          b.size.y,        b.size.z,        b.rotation.a1.x, b.rotation.a1.y,
          b.rotation.a1.z, b.rotation.a2.x, b.rotation.a2.y, b.rotation.a2.z};
}

OrientedBox from_box_vector(const BoxVector& v) {
  OrientedBox b;
  b.center = {v[0], v[1], v[2]};
  b.size = {v[3], v[4], v[5]};
  b.rotation.a1 = {v[6], v[7], v[8]};
  b.rotation.a2 = {v[9], v[10], v[11]};
  return b;
}

Mat3 rotation_to_matrix(const Rotation6& r) {
  const double n1 = norm(r.a1);
  if (n1 < kDegenerate) throw DegenerateRotation("rotation: a1 is zero");
  const Vec3 b1 = r.a1 / n1;
  const Vec3 w = r.a2 - dot(b1, r.a2) * b1;
  const double n2 = norm(w);
  if (n2 < kDegenerate)
    throw DegenerateRotation("rotation: a1 and a2 are parallel or a2 is zero");
  const Vec3 b2 = w / n2;
  Mat3 m;
  m.cols = {b1, b2, cross(b1, b2)};
  return m;
}

Rotation6 matrix_to_rotation6(const Mat3& r) {
  return {r.col(0), r.col(1)};
}

std::array<Vec3, 8> corners(const OrientedBox& b) {
  const Mat3 r = rotation_to_matrix(b.rotation);
  const Vec3 ex = r.col(0) * (0.5 * b.size.x);
  const Vec3 ey = r.col(1) * (0.5 * b.size.y);
  const Vec3 ez = r.col(2) * (0.5 * b.size.z);
  std::array<Vec3, 8> out;
  int i = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out[i++] = b.center + ex * sx + ey * sy + ez * sz;
  return out;
}

double volume(const OrientedBox& b) { return b.size.x * b.size.y * b.size.z; }

bool obb_intersects(const OrientedBox& a, const OrientedBox& b) {
  const Mat3 ra = rotation_to_matrix(a.rotation);
  const Mat3 rb = rotation_to_matrix(b.rotation);
  const Vec3 d = b.center - a.center;
  const Vec3 ha = a.size * 0.5;
  const Vec3 hb = b.size * 0.5;

  std::array<Vec3, 15> axes;
  int n = 0;
  for (int i = 0; i < 3; ++i) axes[n++] = ra.col(i);
  for (int i = 0; i < 3; ++i) axes[n++] = rb.col(i);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) axes[n++] = cross(ra.col(i), rb.col(j));

  for (int k = 0; k < n; ++k) {
    Vec3 axis = axes[k];
    const double len = norm(axis);
    if (len < kDegenerate) continue;  // parallel edge pair
    axis = axis / len;
    const double dist = std::abs(dot(d, axis));
    double r1 = 0.0, r2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      r1 += ha[i] * std::abs(dot(ra.col(i), axis));
      r2 += hb[i] * std::abs(dot(rb.col(i), axis));
    }
    // Touching (gap >= -kContactEps) counts as separated.
    if (dist >= r1 + r2 - kContactEps) return false;
  }
  return true;
}

OrientedBox expand_box(const OrientedBox& b, double k) {
  if (!(k > 0.0)) throw InvalidScale("expand_box: scale must be > 0");
  return {b.center, b.size * k, b.rotation};
}

double top_surface_height(const OrientedBox& b) {
  double top = -1e300;
  for (const Vec3& c : corners(b)) top = std::max(top, c.z);
  return top;
}

double bottom_surface_height(const OrientedBox& b) {
  double bot = 1e300;
  for (const Vec3& c : corners(b)) bot = std::min(bot, c.z);
  return bot;
}

double polygon_area(const std::vector<std::array<double, 2>>& poly) {
  if (poly.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

namespace {

using P2 = std::array<double, 2>;

double cross2(const P2& o, const P2& a, const P2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew monotone chain, CCW output.
std::vector<P2> convex_hull(std::vector<P2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<P2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

std::vector<std::array<double, 2>> footprint(const OrientedBox& b) {
  std::vector<P2> pts;
  pts.reserve(8);
  for (const Vec3& c : corners(b)) pts.push_back({c.x, c.y});
  return convex_hull(std::move(pts));
}

double footprint_area(const OrientedBox& b) { return polygon_area(footprint(b)); }

// Sutherland-Hodgman; clip polygon must be convex CCW.
std::vector<std::array<double, 2>> convex_clip(
    const std::vector<std::array<double, 2>>& subject,
    const std::vector<std::array<double, 2>>& clip) {
  std::vector<P2> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const P2 a = clip[i];
    const P2 b = clip[(i + 1) % clip.size()];
    std::vector<P2> in;
    in.swap(out);
    for (std::size_t j = 0; j < in.size(); ++j) {
      const P2& p = in[j];
      const P2& q = in[(j + 1) % in.size()];
      const double dp = cross2(a, b, p);
      const double dq = cross2(a, b, q);
      if (dp >= 0) {
        out.push_back(p);
        if (dq < 0) {
          const double t = dp / (dp - dq);
          out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
        }
      } else if (dq >= 0) {
        const double t = dp / (dp - dq);
        out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      }
    }
  }
  return out;
}

double horizontal_overlap_ratio(const OrientedBox& lower,
                                const OrientedBox& upper) {
  const auto fl = footprint(lower);
  const auto fu = footprint(upper);
  const double upper_area = polygon_area(fu);
  if (upper_area <= 0.0) return 0.0;
  const double inter = polygon_area(convex_clip(fu, fl));
  return std::clamp(inter / upper_area, 0.0, 1.0);
}

bool contains_point(const OrientedBox& b, const Vec3& p) {
  const Mat3 r = rotation_to_matrix(b.rotation);
  const Vec3 d = r.tmul(p - b.center);
  return std::abs(d.x) <= 0.5 * b.size.x + kContactEps &&
         std::abs(d.y) <= 0.5 * b.size.y + kContactEps &&
         std::abs(d.z) <= 0.5 * b.size.z + kContactEps;
}

bool inside_boundary(const OrientedBox& b, const Aabb& boundary) {
  for (const Vec3& c : corners(b))
    if (!boundary.contains(c, kContactEps)) return false;
  return true;
}

std::optional<double> highest_surface_below(
    const OrientedBox& candidate,
    const std::vector<const OrientedBox*>& surfaces, double penetration_tol) {
  const double bottom = bottom_surface_height(candidate);
  const auto cand_fp = footprint(candidate);
  std::optional<double> best;
  for (const OrientedBox* s : surfaces) {
    const double top = top_surface_height(*s);
    if (top > bottom + penetration_tol) continue;
    if (best && top <= *best) continue;
    if (polygon_area(convex_clip(cand_fp, footprint(*s))) <= 1e-12) continue;
    best = top;
  }
  return best;
}

}  // namespace scenegen::geometry
