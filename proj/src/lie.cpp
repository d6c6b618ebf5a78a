#include "slamobs/lie.hpp"


#include <algorithm>
#include <cmath>
#include <string>

namespace slamobs {

namespace {
constexpr double kSkewTolerance = 1e-12;
}

SkewMatrix3 SkewMatrix3::from_matrix(const Mat3& m) {
  const double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSkewTolerance)) {
    throw GeometryError("matrix is not antisymmetric: max |m + m^T| = " + std::to_string(asym));
  }
  // Rebuild from the strictly-upper entries so the result is exactly antisymmetric.
  return hat3(Vec3(m(2, 1), m(0, 2), m(1, 0)));
}

Rotation3::Rotation3(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw GeometryError("rotation has non-finite entries");
  const double orth = orthonormality_error();
  if (orth > kTolerance) {
    throw GeometryError("rotation not orthonormal: ||R R^T - I||_F = " + std::to_string(orth));
  }
  const double det = m.determinant();
  if (std::abs(det - 1.0) > kTolerance) {
    throw GeometryError("rotation determinant is " + std::to_string(det) + ", expected +1");
  }
}

double Rotation3::orthonormality_error() const {
  return (m_ * m_.transpose() - Mat3::Identity()).norm();
}

Mat4 Pose::matrix() const {
  Mat4 t = Mat4::Identity();
  t.topLeftCorner<3, 3>() = rotation.matrix();
  t.topRightCorner<3, 1>() = position;
  return t;
}

Pose Pose::inverse() const {
  const Rotation3 rt = rotation.transpose();
  return {rt, -(rt * position)};
}

Pose Pose::operator*(const Pose& rhs) const {
  return {rotation * rhs.rotation, rotation * rhs.position + position};
}

SkewMatrix3 hat3(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<  0.0,  -v.z(),  v.y(),
       v.z(),   0.0,  -v.x(),
      -v.y(),  v.x(),   0.0;
  // clang-format on
  return SkewMatrix3(s);
}

Vec3 vee3(const SkewMatrix3& s) {
  const Mat3& m = s.matrix();
  return {m(2, 1), m(0, 2), m(1, 0)};
}

Vec3 vee3(const Mat3& m) { return vee3(SkewMatrix3::from_matrix(m)); }

Mat4 wedge6(const Twist& u) {
  Mat4 w = Mat4::Zero();
  w.topLeftCorner<3, 3>() = hat3(u.omega).matrix();
  w.topRightCorner<3, 1>() = u.vel;
  return w;
}

Rotation3 so3_exp(const Vec3& omega_dt) {
  const double theta2 = omega_dt.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = hat3(omega_dt).matrix();
  double a;  // sin θ / θ
  double b;  // (1 − cos θ) / θ²
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    const double half = std::sin(0.5 * theta);
    b = 2.0 * half * half / theta2;
  }
  return Rotation3(Mat3::Identity() + a * k + b * k * k, Rotation3::Unchecked{});
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = hat3(phi).matrix();
  double b;  // (1 − cos θ) / θ²
  double c;  // (θ − sin θ) / θ³
  if (theta < kSmallAngle) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double half = std::sin(0.5 * theta);
    b = 2.0 * half * half / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + b * k + c * k * k;
}

Pose se3_exp(const Twist& u, double dt) {
  const Vec3 phi = u.omega * dt;
  return {so3_exp(phi), so3_left_jacobian(phi) * (u.vel * dt)};
}

double rotation_distance(const Rotation3& r) {
  const double d = 0.25 * (3.0 - r.trace());
  return std::clamp(d, 0.0, 1.0);
}

Rotation3 project_orthonormal(const Mat3& m) {
  if (!m.allFinite()) throw GeometryError("cannot project a non-finite matrix");
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(2) <= 1e-12 * sv(0)) {
    throw GeometryError("cannot project a rank-deficient matrix onto SO(3)");
  }
  if (!(m.determinant() > 0.0)) {
    throw GeometryError("cannot project a matrix with non-positive determinant onto SO(3)");
  }
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  if (std::abs(r.determinant() - 1.0) > Rotation3::kTolerance) {
    throw GeometryError("determinant correction failed during SO(3) projection");
  }
  return Rotation3(r, Rotation3::Unchecked{});
}

}  // namespace slamobs
