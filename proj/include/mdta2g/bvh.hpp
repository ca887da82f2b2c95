#pragma once

#include "mdta2g/gesture_data.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace mdta2g {

struct BvhJoint {
  std::string name;
  int parent = -1;
  std::array<double, 3> offset{};
  std::vector<std::string> channels;  // as declared, e.g. Xposition ... Zrotation
  std::string rotation_order;         // rotation channel letters in declaration order
  bool has_end_site = false;
  std::array<double, 3> end_offset{};
};

struct BvhClip {
  std::vector<BvhJoint> joints;
  SkeletonLayout layout;
  GestureSequence motion;
  double frame_time = 0.0;
};

/// Parses HIERARCHY + MOTION. Root translation channels are read and dropped.
/// Throws ParseError carrying the offending line number.
BvhClip parse_bvh(std::string_view text);

/// Writes the clip's hierarchy with `motion` as the MOTION block. Position
/// channels are written as zeros.
std::string write_bvh(const BvhClip& clip, const GestureSequence& motion);

}  // namespace mdta2g
