#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace mdta2g {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Rodrigues exponential map from an axis-angle vector (radians).
Mat3 axis_angle_to_rotmat(const Vec3& axis_angle);

/// Angle of the rotation R, in [0, pi]. Uses atan2 so small angles stay accurate.
double rotation_angle(const Mat3& r);

/// Geodesic distance on SO(3) between a and b, in radians.
double geodesic_distance(const Mat3& a, const Mat3& b);

/// Nearest rotation matrix in the Frobenius sense.
Mat3 project_to_so3(const Mat3& m);

/// Single-axis rotation; axis is 'X', 'Y' or 'Z'.
Mat3 axis_rotation(char axis, double radians);

/// Composes R = R_{order[0]}(a0) * R_{order[1]}(a1) * R_{order[2]}(a2), angles
/// in degrees. Supported orders: ZXY, ZYX, XYZ. Throws ConfigError otherwise.
Mat3 euler_to_rotmat(const Vec3& degrees, std::string_view order);

/// Inverse of euler_to_rotmat for the same orders (degrees).
Vec3 rotmat_to_euler(const Mat3& r, std::string_view order);

bool is_supported_euler_order(std::string_view order);

}  // namespace mdta2g
