#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spinmesh/errors.hpp"

namespace spinmesh {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Quaternion q = w + x i + y j + z k. Vectors in R^3 are identified with the
// imaginary part (x, y, z). Coordinate order is (w, x, y, z) everywhere.
struct Quaternion {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  // Real quaternions convert implicitly; scalars act as w + 0i + 0j + 0k.
  Quaternion(double real) : w(real) {}

  static Quaternion pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }
  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  Vec3 imag() const { return {x, y, z}; }
  Vec4 coeffs() const { return {w, x, y, z}; }
  static Quaternion from_coeffs(const Vec4& c) { return {c[0], c[1], c[2], c[3]}; }

  double norm2() const { return w * w + x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm2()); }

  Quaternion conj() const { return {w, -x, -y, -z}; }

  Quaternion inverse() const {
    const double n2 = norm2();
    if (n2 == 0.0) throw GeometryError("Quaternion::inverse: zero quaternion");
    return {w / n2, -x / n2, -y / n2, -z / n2};
  }

  Quaternion operator-() const { return {-w, -x, -y, -z}; }
  Quaternion& operator+=(const Quaternion& r) { w += r.w; x += r.x; y += r.y; z += r.z; return *this; }
  Quaternion& operator-=(const Quaternion& r) { w -= r.w; x -= r.x; y -= r.y; z -= r.z; return *this; }
  Quaternion& operator*=(double s) { w *= s; x *= s; y *= s; z *= s; return *this; }
};

inline Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
inline Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
inline Quaternion operator*(Quaternion a, double s) { return a *= s; }
inline Quaternion operator*(double s, Quaternion a) { return a *= s; }
inline Quaternion operator/(Quaternion a, double s) { return a *= (1.0 / s); }

// Hamilton product.
inline Quaternion mul(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quaternion operator*(const Quaternion& a, const Quaternion& b) { return mul(a, b); }

// 4D real inner product <a|b> = a.w b.w + a.x b.x + a.y b.y + a.z b.z.
inline double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

// conj(q) * v * q. For q = s e^{theta u} this rescales v by s^2 and rotates it
// by -2 theta around u; it is the conjugation convention used on hyperedges.
inline Quaternion sandwich(const Quaternion& q, const Quaternion& v) {
  return mul(mul(q.conj(), v), q);
}

// q^{-1} * v * q, the unit-scale conjugation used on face normals.
inline Quaternion conjugate_by(const Quaternion& q, const Quaternion& v) {
  return sandwich(q, v) / q.norm2();
}

// Polar decomposition q = scale * (cos(angle) + sin(angle) * axis) with
// scale = |q|, angle in [0, pi] and axis a unit imaginary quaternion.
struct PolarForm {
  double scale = 0.0;
  double angle = 0.0;
  Quaternion axis;  // unit, purely imaginary

  Quaternion recompose() const {
    return scale * (Quaternion(std::cos(angle)) + std::sin(angle) * axis);
  }
};

inline PolarForm polar(const Quaternion& q) {
  const double n = q.norm();
  if (n == 0.0) throw GeometryError("polar: zero quaternion");
  const double im = q.imag().norm();
  PolarForm p;
  p.scale = n;
  p.angle = std::atan2(im, q.w);
  if (im > 0.0) {
    p.axis = Quaternion::pure(q.imag() / im);
  } else {
    // Real quaternion: the axis is arbitrary, return the fixed axis i.
    p.axis = {0.0, 1.0, 0.0, 0.0};
  }
  return p;
}

// exp(theta * u) = cos(theta) + sin(theta) u for a unit imaginary axis u.
inline Quaternion exp_axis(double theta, const Vec3& unit_axis) {
  const double s = std::sin(theta);
  return {std::cos(theta), s * unit_axis.x(), s * unit_axis.y(), s * unit_axis.z()};
}

// Left-multiplication matrix: M[q] vec(p) = vec(q p), coordinates (w,x,y,z).
// Satisfies M[a] M[b] = M[a b] and M[conj(q)] = M[q]^T.
inline Mat4 to_real_matrix(const Quaternion& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w, -q.z,  q.y,
       q.y,  q.z,  q.w, -q.x,
       q.z, -q.y,  q.x,  q.w;
  return m;
}

// Right-multiplication matrix: R[p] vec(q) = vec(q p).
inline Mat4 right_mul_matrix(const Quaternion& p) {
  Mat4 m;
  m << p.w, -p.x, -p.y, -p.z,
       p.x,  p.w,  p.z, -p.y,
       p.y, -p.z,  p.w,  p.x,
       p.z,  p.y, -p.x,  p.w;
  return m;
}

} // namespace spinmesh
