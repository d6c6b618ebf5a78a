#include "slamobs/lie.hpp"
#include "taylor_oracle.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

namespace slamobs {
namespace {

using testing::taylor_expm;
constexpr double kPi = std::numbers::pi;

Mat3 rz(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Vec3 random_vec(std::mt19937_64& gen, double max_norm) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 v(n(gen), n(gen), n(gen));
  return v.normalized() * (max_norm * u(gen));
}

TEST(Hat3, MatchesSkewLayout) {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(hat3(Vec3(1, 2, 3)).matrix(), expected);
  EXPECT_EQ(hat3(Vec3::Zero()).matrix(), Mat3::Zero());
  Mat3 ez;
  ez << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(hat3(Vec3(0, 0, 1)).matrix(), ez);
}

TEST(Hat3, CrossProduct) {
  const Vec3 a(0.3, -1.2, 4.0), b(2.0, 0.5, -0.7);
  EXPECT_TRUE((hat3(a).matrix() * b).isApprox(a.cross(b), 1e-15));
}

TEST(Vee3, InvertsHat) {
  Mat3 s;
  s << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(vee3(s), Vec3(1, 2, 3));
  EXPECT_EQ(vee3(Mat3::Zero().eval()), Vec3::Zero());
  Mat3 ex;
  ex << 0, 0, 0, 0, 0, -5, 0, 5, 0;
  EXPECT_EQ(vee3(ex), Vec3(5, 0, 0));
}

TEST(Vee3, RejectsSymmetricPart) {
  Mat3 s = hat3(Vec3(1, 2, 3)).matrix();
  s(0, 1) += 1e-9;
  EXPECT_THROW(vee3(s), GeometryError);
  EXPECT_THROW(SkewMatrix3::from_matrix(Mat3::Identity()), GeometryError);
}

TEST(Hat3, PropertyRoundTripAndAntisymmetry) {
  std::mt19937_64 gen(7);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 v = random_vec(gen, 1e3);
    const Mat3 h = hat3(v).matrix();
    EXPECT_EQ(vee3(hat3(v)), v);
    EXPECT_EQ(h.transpose().eval(), (-h).eval());
    EXPECT_EQ(hat3(vee3(SkewMatrix3::from_matrix(h))).matrix(), h);
  }
}

TEST(Wedge6, BlockStructure) {
  EXPECT_EQ(wedge6(Twist{}), Mat4::Zero());
  Mat4 w;
  w << 0, -3, 2, 4, 3, 0, -1, 5, -2, 1, 0, 6, 0, 0, 0, 0;
  EXPECT_EQ(wedge6(Twist{Vec3(1, 2, 3), Vec3(4, 5, 6)}), w);
  const Mat4 wz = wedge6(Twist{Vec3(0, 0, 1), Vec3::Zero()});
  EXPECT_EQ(Mat3(wz.block(0, 0, 3, 3)), hat3(Vec3(0, 0, 1)).matrix());
  EXPECT_EQ(wz.row(3).norm(), 0.0);
  EXPECT_EQ(wz.col(3).norm(), 0.0);
}

TEST(Rotation3, RejectsNonRotations) {
  EXPECT_THROW(Rotation3(Mat3(2.0 * Mat3::Identity())), GeometryError);
  EXPECT_THROW(Rotation3(Mat3(Vec3(1, 1, -1).asDiagonal())), GeometryError);
  EXPECT_NO_THROW(Rotation3(rz(0.3)));
}

TEST(So3Exp, Examples) {
  EXPECT_EQ(so3_exp(Vec3::Zero()).matrix(), Mat3::Identity());

  Mat3 quarter;
  quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Vec3 wz(0, 0, kPi / 2);
  EXPECT_LE((so3_exp(wz).matrix() - quarter).norm(), 1e-15);
  EXPECT_LE((so3_exp(wz).matrix() - taylor_expm(hat3(wz).matrix())).norm(), 1e-12);

  const Vec3 wx(kPi, 0, 0);
  EXPECT_LE((so3_exp(wx).matrix() - Mat3(Vec3(1, -1, -1).asDiagonal())).norm(), 1e-15);
  EXPECT_LE((so3_exp(wx).matrix() - taylor_expm(hat3(wx).matrix())).norm(), 1e-12);
}

TEST(So3Exp, SmallAngleBranchIsContinuous) {
  const Vec3 axis = Vec3(1, -2, 0.5).normalized();
  for (double theta : {0.0, 1e-12, 1e-9, 9.9e-8, 1.01e-7, 1e-6}) {
    const Vec3 w = theta * axis;
    EXPECT_LE((so3_exp(w).matrix() - taylor_expm(hat3(w).matrix())).norm(), 1e-15) << theta;
    const Mat3 k = hat3(w).matrix();
    EXPECT_LE((so3_left_jacobian(w) - (Mat3::Identity() + k / 2.0 + k * k / 6.0)).norm(), 1e-15) << theta;
  }
}

TEST(So3Exp, PropertyMatchesTaylorOracle) {
  std::mt19937_64 gen(11);
  for (int k = 0; k < 2000; ++k) {
    const Vec3 w = random_vec(gen, kPi);
    const Rotation3 r = so3_exp(w);
    EXPECT_LE((r.matrix() - taylor_expm(hat3(w).matrix())).norm(), 1e-12);
    EXPECT_LE(r.orthonormality_error(), 1e-14);
    EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-14);
  }
}

TEST(Se3Exp, Examples) {
  const Pose id = se3_exp(Twist{}, 0.37);
  EXPECT_EQ(id.matrix(), Mat4::Identity());

  const Pose tr = se3_exp(Twist{Vec3::Zero(), Vec3(1, 2, 3)}, 1.0);
  EXPECT_EQ(tr.rotation.matrix(), Mat3::Identity());
  EXPECT_EQ(tr.position, Vec3(1, 2, 3));

  const Twist u{Vec3(0, 0, kPi / 2), Vec3(1, 0, 0)};
  const Pose p = se3_exp(u, 1.0);
  EXPECT_LE((p.rotation.matrix() - rz(kPi / 2)).norm(), 1e-15);
  EXPECT_NEAR(p.position.x(), 0.63662, 1e-5);
  EXPECT_NEAR(p.position.y(), 0.63662, 1e-5);
  EXPECT_LE((p.position - Vec3(2 / kPi, 2 / kPi, 0)).norm(), 1e-15);
  EXPECT_LE((p.matrix() - taylor_expm(wedge6(u))).norm(), 1e-10);
  EXPECT_EQ(p.matrix().row(3), Eigen::RowVector4d(0, 0, 0, 1));
}

TEST(Se3Exp, PropertyMatchesOracleAndInverse) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> dts(1e-4, 2.0);
  for (int k = 0; k < 2000; ++k) {
    const double dt = dts(gen);
    const Twist u{random_vec(gen, kPi) / dt, random_vec(gen, 10.0) / dt};
    const Pose fwd = se3_exp(u, dt);
    EXPECT_LE((fwd.matrix() - taylor_expm((wedge6(u) * dt).eval())).norm(), 1e-10);
    EXPECT_LE(((fwd * se3_exp(-u, dt)).matrix() - Mat4::Identity()).norm(), 1e-10);
  }
}

TEST(RotationDistance, Examples) {
  EXPECT_EQ(rotation_distance(Rotation3::identity()), 0.0);
  EXPECT_DOUBLE_EQ(rotation_distance(Rotation3(rz(kPi))), 1.0);
  EXPECT_NEAR(rotation_distance(Rotation3(rz(kPi / 2))), 0.5, 1e-15);
}

TEST(RotationDistance, PropertyInUnitInterval) {
  std::mt19937_64 gen(17);
  for (int k = 0; k < 1000; ++k) {
    const double d = rotation_distance(so3_exp(random_vec(gen, kPi)));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

TEST(ProjectOrthonormal, Examples) {
  EXPECT_LE((project_orthonormal(Mat3::Identity()).matrix() - Mat3::Identity()).norm(), 1e-15);
  EXPECT_LE((project_orthonormal(1.001 * rz(kPi / 2)).matrix() - rz(kPi / 2)).norm(), 1e-12);
}

TEST(ProjectOrthonormal, PropertyRepairsPerturbationAndIsIdempotent) {
  std::mt19937_64 gen(19);
  std::normal_distribution<double> n(0.0, 1e-6);
  for (int k = 0; k < 500; ++k) {
    Mat3 m = so3_exp(random_vec(gen, kPi)).matrix();
    for (int i = 0; i < 9; ++i) m.data()[i] += n(gen);
    const Rotation3 once = project_orthonormal(m);
    EXPECT_LE(once.orthonormality_error(), 1e-12);
    EXPECT_LE((project_orthonormal(once.matrix()).matrix() - once.matrix()).norm(), 1e-12);
    EXPECT_LE((once.matrix() - m).norm(), 1e-5);
  }
}

TEST(ProjectOrthonormal, RejectsDegenerateInput) {
  EXPECT_THROW(project_orthonormal(Mat3::Zero()), GeometryError);
  Mat3 rank2 = Mat3::Identity();
  rank2(2, 2) = 0.0;
  EXPECT_THROW(project_orthonormal(rank2), GeometryError);
  EXPECT_THROW(project_orthonormal(Mat3(Vec3(1, 1, -1).asDiagonal())), GeometryError);
}

TEST(Pose, InverseAndComposition) {
  const Pose a{so3_exp(Vec3(0.1, -0.4, 0.9)), Vec3(1, -2, 3)};
  EXPECT_LE(((a * a.inverse()).matrix() - Mat4::Identity()).norm(), 1e-14);
  EXPECT_LE(((a * a).matrix() - a.matrix() * a.matrix()).norm(), 1e-14);
}

}  // namespace
}  // namespace slamobs
