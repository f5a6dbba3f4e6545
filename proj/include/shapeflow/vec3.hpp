#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace shapeflow {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline Vec3 operator*(double s, const Vec3& a) { return a * s; }
inline Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) { a = a + b; return a; }
inline Vec3& operator-=(Vec3& a, const Vec3& b) { a = a - b; return a; }
inline Vec3& operator*=(Vec3& a, double s) { a = a * s; return a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const Vec3& a) { return dot(a, a); }

inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  if (n == 0.0) throw std::domain_error("normalized: zero vector");
  return a / n;
}

inline Vec3 cwise_mul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline Vec3 cwise_min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 cwise_max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline Vec3 cwise_abs(const Vec3& a) { return {std::fabs(a.x), std::fabs(a.y), std::fabs(a.z)}; }
inline double max_component(const Vec3& a) { return std::max(a.x, std::max(a.y, a.z)); }

inline bool finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Row-major 3x3 matrix, used for rigid poses and joint rotations.
struct Mat3 {
  std::array<double, 9> m = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }

  static Mat3 identity() { return {}; }
};

inline Vec3 operator*(const Mat3& r, const Vec3& v) {
  return {r(0, 0) * v.x + r(0, 1) * v.y + r(0, 2) * v.z,
          r(1, 0) * v.x + r(1, 1) * v.y + r(1, 2) * v.z,
          r(2, 0) * v.x + r(2, 1) * v.y + r(2, 2) * v.z};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
  return out;
}

inline Mat3 transpose(const Mat3& a) {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = a(c, r);
  return out;
}

// Transpose applied to a vector (inverse rotation for orthonormal matrices).
inline Vec3 mul_transposed(const Mat3& r, const Vec3& v) {
  return {r(0, 0) * v.x + r(1, 0) * v.y + r(2, 0) * v.z,
          r(0, 1) * v.x + r(1, 1) * v.y + r(2, 1) * v.z,
          r(0, 2) * v.x + r(1, 2) * v.y + r(2, 2) * v.z};
}

// Rodrigues rotation from a rotation vector (axis * angle).
inline Mat3 rotation_from_axis_angle(const Vec3& w) {
  double angle = norm(w);
  if (angle < 1e-14) return Mat3::identity();
  Vec3 u = w / angle;
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r(0, 0) = c + u.x * u.x * t;
  r(0, 1) = u.x * u.y * t - u.z * s;
  r(0, 2) = u.x * u.z * t + u.y * s;
  r(1, 0) = u.y * u.x * t + u.z * s;
  r(1, 1) = c + u.y * u.y * t;
  r(1, 2) = u.y * u.z * t - u.x * s;
  r(2, 0) = u.z * u.x * t - u.y * s;
  r(2, 1) = u.z * u.y * t + u.x * s;
  r(2, 2) = c + u.z * u.z * t;
  return r;
}

inline bool is_orthonormal(const Mat3& r, double tol = 1e-6) {
  Mat3 rtr = transpose(r) * r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double want = (i == j) ? 1.0 : 0.0;
      if (std::fabs(rtr(i, j) - want) > tol) return false;
    }
  return true;
}

}  // namespace shapeflow
