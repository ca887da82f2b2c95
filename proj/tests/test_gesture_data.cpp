#include "mdta2g/errors.hpp"
#include "mdta2g/gesture_data.hpp"
#include "mdta2g/rotation.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace mdta2g;

namespace {

using LMat3 = Eigen::Matrix<long double, 3, 3>;

LMat3 ref_axis(char axis, long double deg) {
  const long double r = deg * 3.14159265358979323846264338327950288L / 180.0L;
  const long double c = std::cos(r), s = std::sin(r);
  LMat3 m = LMat3::Identity();
  if (axis == 'X') m << 1, 0, 0, 0, c, -s, 0, s, c;
  if (axis == 'Y') m << c, 0, s, 0, 1, 0, -s, 0, c;
  if (axis == 'Z') m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 random_rotation(Rng& rng) {
  return axis_angle_to_rotmat(Vec3(rng.normal(), rng.normal(), rng.normal()));
}

}  // namespace

TEST(Layouts, JointCounts) {
  const auto whole = SkeletonLayout::whole_body();
  const auto upper = SkeletonLayout::upper_body();
  EXPECT_EQ(whole.joint_count, 75);
  EXPECT_EQ(whole.body_subset.size(), 27u);
  EXPECT_EQ(upper.joint_count, 62);
  EXPECT_EQ(upper.body_subset.size(), 14u);
  for (const auto& l : {whole, upper, SkeletonLayout::custom(5)}) {
    EXPECT_NO_THROW(l.validate());
    std::set<int> uniq(l.body_subset.begin(), l.body_subset.end());
    EXPECT_EQ(uniq.size(), l.body_subset.size());
    for (int j : l.body_subset) EXPECT_TRUE(j >= 0 && j < l.joint_count);
    EXPECT_EQ(static_cast<int>(l.joint_names.size()), l.joint_count);
  }
  EXPECT_EQ(SkeletonLayout::from_name("custom:3").joint_count, 3);
  EXPECT_THROW(SkeletonLayout::from_name("bogus"), ConfigError);
}

TEST(Euler, ZeroIsIdentity) {
  for (const char* order : {"ZXY", "ZYX", "XYZ"}) {
    EXPECT_TRUE(euler_to_rotmat(Vec3::Zero(), order).isApprox(Mat3::Identity(), 1e-15));
  }
}

TEST(Euler, NinetyAboutThirdAxis) {
  const Mat3 r = euler_to_rotmat(Vec3(0, 0, 90), "XYZ");
  const Vec3 mapped = r * Vec3::UnitX();
  EXPECT_NEAR((mapped - Vec3::UnitY()).norm(), 0.0, 1e-12);
}

TEST(Euler, CompositionOracle) {
  for (const char* order : {"ZXY", "ZYX", "XYZ"}) {
    const Vec3 deg(30, 45, 60);
    const LMat3 ref = ref_axis(order[0], 30) * ref_axis(order[1], 45) * ref_axis(order[2], 60);
    const Mat3 got = euler_to_rotmat(deg, order);
    EXPECT_LT((got - ref.cast<double>()).cwiseAbs().maxCoeff(), 1e-14) << order;
  }
}

TEST(Euler, OrthonormalAndInvertible) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Vec3 deg(rng.uniform(-170, 170), rng.uniform(-80, 80), rng.uniform(-170, 170));
    for (const char* order : {"ZXY", "ZYX", "XYZ"}) {
      const Mat3 r = euler_to_rotmat(deg, order);
      EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_NEAR(r.determinant(), 1.0, 1e-10);
      EXPECT_TRUE(euler_to_rotmat(rotmat_to_euler(r, order), order).isApprox(r, 1e-9));
    }
  }
}

TEST(Euler, UnknownOrderRejected) {
  EXPECT_THROW(euler_to_rotmat(Vec3::Zero(), "YXZ"), ConfigError);
  EXPECT_FALSE(is_supported_euler_order("ABC"));
}

TEST(Rotation, GeodesicDistance) {
  const Mat3 a = axis_rotation('Z', 0.3);
  const Mat3 b = axis_rotation('Z', 1.0);
  EXPECT_NEAR(geodesic_distance(a, b), 0.7, 1e-12);
  EXPECT_NEAR(rotation_angle(axis_angle_to_rotmat(Vec3(0, 1e-9, 0))), 1e-9, 1e-20);
  EXPECT_NEAR(rotation_angle(axis_rotation('X', 3.0)), 3.0, 1e-12);
}

TEST(Rotation, ProjectionRestoresRotation) {
  Rng rng(9);
  const Mat3 r = random_rotation(rng);
  Mat3 noisy = r;
  noisy(0, 1) += 0.01;
  const Mat3 p = project_to_so3(noisy);
  EXPECT_NEAR(p.determinant(), 1.0, 1e-12);
  EXPECT_LT(geodesic_distance(p, r), 0.02);
  EXPECT_TRUE(project_to_so3(r).isApprox(r, 1e-12));
}

TEST(Gesture, FlattenRoundTripIsExact) {
  Rng rng(10);
  const auto layout = SkeletonLayout::custom(3);
  GestureSequence seq(layout, 5, 30.0);
  for (int f = 0; f < 5; ++f) {
    for (int j = 0; j < 3; ++j) seq.at(f, j) = random_rotation(rng);
  }
  const Mat flat = flatten(seq);
  EXPECT_EQ(flat.cols(), 27);
  EXPECT_EQ(flat(2, 9 * 1 + 3 * 2 + 1), seq.at(2, 1)(2, 1));  // row-major 3x3 blocks
  EXPECT_EQ(unflatten(flat, layout, 30.0), seq);
  const Mat arbitrary = test::random_mat(4, 27, rng);
  EXPECT_EQ(flatten(unflatten(arbitrary, layout, 30.0)), arbitrary);
  EXPECT_THROW(unflatten(test::random_mat(4, 26, rng), layout, 30.0), std::invalid_argument);
}

TEST(Gesture, ValidateChecksRotations) {
  GestureSequence seq(SkeletonLayout::custom(1), 2);
  EXPECT_NO_THROW(seq.validate());
  seq.at(1, 0)(0, 0) = 1.01;
  EXPECT_ANY_THROW(seq.validate());
}

TEST(Resample, Decimation) {
  Rng rng(12);
  const auto layout = SkeletonLayout::custom(2);
  GestureSequence seq(layout, 1200, 120.0);
  for (int f = 0; f < 1200; ++f) {
    for (int j = 0; j < 2; ++j) seq.at(f, j) = random_rotation(rng);
  }
  const GestureSequence out = resample(seq, 30.0);
  EXPECT_EQ(out.frames(), 300);
  EXPECT_EQ(out.fps(), 30.0);
  EXPECT_EQ(out.at(0, 1), seq.at(0, 1));
  EXPECT_EQ(out.at(2, 0), seq.at(8, 0));
  EXPECT_EQ(resample(seq, 120.0), seq);
  EXPECT_EQ(resample(resample(seq, 60.0), 30.0), out);
  EXPECT_ANY_THROW(resample(seq, 50.0));
}

TEST(Gesture, AngularSpeed) {
  const auto layout = SkeletonLayout::custom(2);
  GestureSequence seq(layout, 4, 30.0);
  for (int f = 0; f < 4; ++f) seq.at(f, 0) = axis_rotation('Y', 0.01 * f);
  const auto s0 = joint_angular_speed(seq, 0);
  ASSERT_EQ(s0.size(), 4u);
  for (double v : s0) EXPECT_NEAR(v, 0.3, 1e-10);
  const auto mean = mean_angular_speed(seq);
  for (double v : mean) EXPECT_NEAR(v, 0.15, 1e-10);
}
