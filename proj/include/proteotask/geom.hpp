#pragma once

#include <cmath>

namespace proteotask {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0 ? *this / n : Vec3{};
  }
};

inline double dist2(const Vec3& a, const Vec3& b) { return (a - b).norm2(); }
inline double dist(const Vec3& a, const Vec3& b) { return std::sqrt(dist2(a, b)); }

// Signed dihedral in degrees, range (-180, 180].
inline double dihedral_deg(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4) {
  Vec3 b1 = p2 - p1, b2 = p3 - p2, b3 = p4 - p3;
  Vec3 n1 = b1.cross(b2), n2 = b2.cross(b3);
  Vec3 m = n1.cross(b2.normalized());
  double x = n1.dot(n2), y = m.dot(n2);
  return std::atan2(y, x) * 180.0 / M_PI;
}

}  // namespace proteotask
