#include "mdta2g/rotation.hpp"

#include "mdta2g/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mdta2g {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}  // namespace

Mat3 axis_angle_to_rotmat(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta < 1e-12) {
    Mat3 k;
    k << 0, -axis_angle.z(), axis_angle.y(), axis_angle.z(), 0, -axis_angle.x(), -axis_angle.y(),
        axis_angle.x(), 0;
    return Mat3::Identity() + k;
  }
  return Eigen::AngleAxisd(theta, axis_angle / theta).toRotationMatrix();
}

double rotation_angle(const Mat3& r) {
  const double s = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

double geodesic_distance(const Mat3& a, const Mat3& b) {
  return rotation_angle(a.transpose() * b);
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 axis_rotation(char axis, double radians) {
  switch (axis) {
    case 'X': return Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix();
    case 'Y': return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
    case 'Z': return Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix();
    default: throw ConfigError(std::string("unknown rotation axis '") + axis + "'");
  }
}

bool is_supported_euler_order(std::string_view order) {
  return order == "ZXY" || order == "ZYX" || order == "XYZ";
}

Mat3 euler_to_rotmat(const Vec3& degrees, std::string_view order) {
  if (!is_supported_euler_order(order)) {
    throw ConfigError("unsupported Euler order '" + std::string(order) + "'");
  }
  if (!degrees.allFinite()) throw ConfigError("Euler angles must be finite");
  return axis_rotation(order[0], degrees[0] * kDegToRad) *
         axis_rotation(order[1], degrees[1] * kDegToRad) *
         axis_rotation(order[2], degrees[2] * kDegToRad);
}

Vec3 rotmat_to_euler(const Mat3& r, std::string_view order) {
  auto clamp1 = [](double v) { return std::max(-1.0, std::min(1.0, v)); };
  Vec3 rad;
  if (order == "XYZ") {
    rad << std::atan2(-r(1, 2), r(2, 2)), std::asin(clamp1(r(0, 2))), std::atan2(-r(0, 1), r(0, 0));
  } else if (order == "ZXY") {
    rad << std::atan2(-r(0, 1), r(1, 1)), std::asin(clamp1(r(2, 1))), std::atan2(-r(2, 0), r(2, 2));
  } else if (order == "ZYX") {
    rad << std::atan2(r(1, 0), r(0, 0)), std::asin(clamp1(-r(2, 0))), std::atan2(r(2, 1), r(2, 2));
  } else {
    throw ConfigError("unsupported Euler order '" + std::string(order) + "'");
  }
  return rad * kRadToDeg;
}

}  // namespace mdta2g
