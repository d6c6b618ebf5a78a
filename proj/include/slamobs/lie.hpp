#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace slamobs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Raised when a value violates a geometric invariant (non-orthonormal
/// rotation, non-antisymmetric matrix, rank-deficient projection input).
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Element of so(3). Antisymmetric by construction: only hat3() and
/// SkewMatrix3::from_matrix() produce one.
class SkewMatrix3 {
 public:
  SkewMatrix3() : m_(Mat3::Zero()) {}

  /// Accepts `m` only if max |m + mᵀ| <= 1e-12.
  static SkewMatrix3 from_matrix(const Mat3& m);

  const Mat3& matrix() const { return m_; }

 private:
  explicit SkewMatrix3(const Mat3& m) : m_(m) {}
  friend SkewMatrix3 hat3(const Vec3& v);

  Mat3 m_;
};

/// Attitude matrix in SO(3).
class Rotation3 {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation3() : m_(Mat3::Identity()) {}

  /// Checks ‖m mᵀ − I‖_F <= 1e-9 and |det m − 1| <= 1e-9.
  explicit Rotation3(const Mat3& m);

  static Rotation3 identity() { return Rotation3(); }

  const Mat3& matrix() const { return m_; }
  Rotation3 transpose() const { return Rotation3(m_.transpose(), Unchecked{}); }
  double trace() const { return m_.trace(); }

  Rotation3 operator*(const Rotation3& rhs) const { return Rotation3(m_ * rhs.m_, Unchecked{}); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// ‖m mᵀ − I‖_F.
  double orthonormality_error() const;

 private:
  struct Unchecked {};
  Rotation3(const Mat3& m, Unchecked) : m_(m) {}
  friend Rotation3 so3_exp(const Vec3& omega_dt);
  friend Rotation3 project_orthonormal(const Mat3& m);

  Mat3 m_;
};

/// Body-frame velocity pair U = [omega; vel].
struct Twist {
  Vec3 omega = Vec3::Zero();  // rad/s
  Vec3 vel = Vec3::Zero();    // m/s

  Twist operator-() const { return {-omega, -vel}; }
  Twist operator*(double s) const { return {omega * s, vel * s}; }
  bool is_finite() const { return omega.allFinite() && vel.allFinite(); }
};

/// Rigid transform in SE(3): rotation plus inertial-frame position.
struct Pose {
  Rotation3 rotation;
  Vec3 position = Vec3::Zero();

  static Pose identity() { return {}; }

  /// 4×4 homogeneous form; bottom row is exactly [0 0 0 1].
  Mat4 matrix() const;
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Vec3 transform_point(const Vec3& p) const { return rotation * p + position; }
};

/// Angles below this switch Rodrigues and left-Jacobian coefficients to
/// their Taylor expansions.
inline constexpr double kSmallAngle = 1e-7;

SkewMatrix3 hat3(const Vec3& v);

Vec3 vee3(const SkewMatrix3& s);

/// Convenience overload; throws GeometryError on a non-antisymmetric input.
Vec3 vee3(const Mat3& m);

/// se(3) embedding: [[hat3(omega), vel], [0, 0]].
Mat4 wedge6(const Twist& u);

/// Rodrigues exponential of hat3(omega_dt).
Rotation3 so3_exp(const Vec3& omega_dt);

/// Left Jacobian of SO(3), J_l(phi) = Σ_k hat(phi)^k / (k+1)!.
Mat3 so3_left_jacobian(const Vec3& phi);

/// Closed-form exp(wedge6(u)·dt).
Pose se3_exp(const Twist& u, double dt);

/// (1/4)·Tr{I − r}, clamped to [0, 1].
double rotation_distance(const Rotation3& r);

/// Nearest rotation in the Frobenius sense (SVD polar factor).
Rotation3 project_orthonormal(const Mat3& m);

}  // namespace slamobs
