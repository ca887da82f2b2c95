#pragma once

#include "mdta2g/autograd.hpp"
#include "mdta2g/rotation.hpp"

#include <string>
#include <vector>

namespace mdta2g {

struct SkeletonLayout {
  int joint_count = 0;
  std::vector<std::string> joint_names;
  std::vector<int> body_subset;  // indices of non-hand joints within this layout
  int designated_joint = 0;      // joint whose speed drives the synthetic audio

  /// 27 body joints followed by 48 hand joints.
  static SkeletonLayout whole_body();
  /// 14 upper-body joints followed by 48 hand joints.
  static SkeletonLayout upper_body();
  /// Generic layout with `joints` body joints named joint0..jointN-1.
  static SkeletonLayout custom(int joints);
  /// "whole", "upper" or "custom:<J>".
  static SkeletonLayout from_name(const std::string& name);

  int feature_width() const { return joint_count * 9; }
  void validate() const;

  bool operator==(const SkeletonLayout&) const = default;
};

class GestureSequence {
 public:
  GestureSequence() = default;
  GestureSequence(SkeletonLayout layout, int frames, double fps = 30.0);

  int frames() const { return frames_; }
  int joints() const { return layout_.joint_count; }
  double fps() const { return fps_; }
  double duration() const { return frames_ / fps_; }
  const SkeletonLayout& layout() const { return layout_; }

  Mat3& at(int frame, int joint) { return rotations_[index(frame, joint)]; }
  const Mat3& at(int frame, int joint) const { return rotations_[index(frame, joint)]; }

  /// Throws std::invalid_argument if any block is not a rotation within tol.
  void validate(double tol = 1e-4) const;

  bool operator==(const GestureSequence&) const = default;

 private:
  std::size_t index(int frame, int joint) const {
    return static_cast<std::size_t>(frame) * static_cast<std::size_t>(layout_.joint_count) +
           static_cast<std::size_t>(joint);
  }

  SkeletonLayout layout_;
  int frames_ = 0;
  double fps_ = 30.0;
  std::vector<Mat3> rotations_;
};

/// Frame-major flat view: one row per frame, 9 row-major entries per joint.
struct FlatGesture {
  Mat values;
  SkeletonLayout layout;
  double fps = 30.0;
};

Mat flatten(const GestureSequence& seq);
/// Exact inverse of flatten; performs no projection or validation.
GestureSequence unflatten(const Mat& values, const SkeletonLayout& layout, double fps);
/// Like unflatten, but projects every 3x3 block onto SO(3). Used for model output.
GestureSequence to_rotations(const Mat& values, const SkeletonLayout& layout, double fps);

/// Pure decimation; source fps must be an integer multiple of target_fps.
GestureSequence resample(const GestureSequence& seq, double target_fps);

/// Mean over joints of the geodesic distance between frame f and f+1, times fps.
/// The last frame repeats the previous value. Empty for single-frame input.
std::vector<double> mean_angular_speed(const GestureSequence& seq);
/// Angular speed of one joint, same convention as mean_angular_speed.
std::vector<double> joint_angular_speed(const GestureSequence& seq, int joint);

}  // namespace mdta2g
