#pragma once

#include <array>
#include <cmath>

namespace scenegen {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  // componentwise
  Vec3 cmul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
  Vec3 cdiv(const Vec3& o) const { return {x / o.x, y / o.y, z / o.z}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// Column-major 3x3 matrix: col(i) is the i-th basis vector.
struct Mat3 {
  std::array<Vec3, 3> cols{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

  static Mat3 identity() { return {}; }

  const Vec3& col(int i) const { return cols[static_cast<std::size_t>(i)]; }
  Vec3& col(int i) { return cols[static_cast<std::size_t>(i)]; }

  double operator()(int r, int c) const { return cols[static_cast<std::size_t>(c)][r]; }

  Vec3 operator*(const Vec3& v) const {
    return cols[0] * v.x + cols[1] * v.y + cols[2] * v.z;
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 m;
    m.cols = {(*this) * o.cols[0], (*this) * o.cols[1], (*this) * o.cols[2]};
    return m;
  }

  // R^T v  (rotation inverse for orthonormal R)
  Vec3 tmul(const Vec3& v) const {
    return {dot(cols[0], v), dot(cols[1], v), dot(cols[2], v)};
  }

  Mat3 transposed() const {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.cols[static_cast<std::size_t>(c)][r] = (*this)(c, r);
    return m;
  }

  double det() const { return dot(cols[0], cross(cols[1], cols[2])); }
};

// Axis-aligned box, used for room boundaries.
struct Aabb {
  Vec3 lo, hi;

  bool contains(const Vec3& p, double eps = 0.0) const {
    return p.x >= lo.x - eps && p.x <= hi.x + eps && p.y >= lo.y - eps &&
           p.y <= hi.y + eps && p.z >= lo.z - eps && p.z <= hi.z + eps;
  }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return (lo + hi) * 0.5; }
};

}  // namespace scenegen
