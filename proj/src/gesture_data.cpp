#include "mdta2g/gesture_data.hpp"

#include "mdta2g/errors.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace mdta2g {

namespace {

const std::vector<std::string> kBodyJoints = {
    "Hips",         "Spine",        "Spine1",        "Spine2",        "Spine3",
    "Neck",         "Neck1",        "Head",          "HeadEnd",       "RightShoulder",
    "RightArm",     "RightForeArm", "RightHand",     "LeftShoulder",  "LeftArm",
    "LeftForeArm",  "LeftHand",     "RightUpLeg",    "RightLeg",      "RightFoot",
    "RightForeFoot", "RightToeBase", "LeftUpLeg",    "LeftLeg",       "LeftFoot",
    "LeftForeFoot", "LeftToeBase"};

const std::vector<std::string> kUpperJoints = {
    "Spine",    "Spine1",       "Spine2",    "Spine3",        "Neck",    "Head",        "RightShoulder",
    "RightArm", "RightForeArm", "RightHand", "LeftShoulder",  "LeftArm", "LeftForeArm", "LeftHand"};

std::vector<std::string> hand_joints() {
  std::vector<std::string> names;
  for (const char* side : {"Right", "Left"}) {
    for (const char* finger : {"Thumb", "Index", "Middle", "Ring", "Pinky"}) {
      for (int k = 1; k <= 4; ++k) names.push_back(std::string(side) + "Hand" + finger + std::to_string(k));
    }
    for (const char* finger : {"Index", "Middle", "Ring", "Pinky"}) {
      names.push_back(std::string(side) + "Hand" + finger);
    }
  }
  return names;
}

SkeletonLayout build(const std::vector<std::string>& body) {
  SkeletonLayout layout;
  layout.joint_names = body;
  for (auto& n : hand_joints()) layout.joint_names.push_back(n);
  layout.joint_count = static_cast<int>(layout.joint_names.size());
  for (int i = 0; i < static_cast<int>(body.size()); ++i) {
    layout.body_subset.push_back(i);
    if (body[i] == "RightHand") layout.designated_joint = i;
  }
  return layout;
}

}  // namespace

SkeletonLayout SkeletonLayout::whole_body() { return build(kBodyJoints); }
SkeletonLayout SkeletonLayout::upper_body() { return build(kUpperJoints); }

SkeletonLayout SkeletonLayout::custom(int joints) {
  if (joints <= 0) throw ConfigError("custom layout needs at least one joint");
  SkeletonLayout layout;
  layout.joint_count = joints;
  for (int i = 0; i < joints; ++i) {
    layout.joint_names.push_back("joint" + std::to_string(i));
    layout.body_subset.push_back(i);
  }
  layout.designated_joint = joints - 1;
  return layout;
}

SkeletonLayout SkeletonLayout::from_name(const std::string& name) {
  if (name == "whole") return whole_body();
  if (name == "upper") return upper_body();
  if (name.rfind("custom:", 0) == 0) {
    try {
      return custom(std::stoi(name.substr(7)));
    } catch (const std::logic_error&) {
      throw ConfigError("layout: bad joint count in '" + name + "'");
    }
  }
  throw ConfigError("layout: unknown layout '" + name + "' (expected whole, upper, custom:<J>)");
}

void SkeletonLayout::validate() const {
  if (joint_count <= 0) throw ConfigError("layout: joint_count must be positive");
  if (static_cast<int>(joint_names.size()) != joint_count) {
    throw ConfigError("layout: joint_names size differs from joint_count");
  }
  std::set<int> seen;
  for (int idx : body_subset) {
    if (idx < 0 || idx >= joint_count) throw ConfigError("layout: body_subset index out of range");
    if (!seen.insert(idx).second) throw ConfigError("layout: duplicate body_subset index");
  }
  if (designated_joint < 0 || designated_joint >= joint_count) {
    throw ConfigError("layout: designated_joint out of range");
  }
}

GestureSequence::GestureSequence(SkeletonLayout layout, int frames, double fps)
    : layout_(std::move(layout)), frames_(frames), fps_(fps) {
  if (frames <= 0) throw std::invalid_argument("GestureSequence: frame count must be positive");
  if (!(fps > 0.0)) throw std::invalid_argument("GestureSequence: fps must be positive");
  rotations_.assign(static_cast<std::size_t>(frames) * static_cast<std::size_t>(layout_.joint_count),
                    Mat3::Identity());
}

void GestureSequence::validate(double tol) const {
  for (int f = 0; f < frames_; ++f) {
    for (int j = 0; j < layout_.joint_count; ++j) {
      const Mat3& r = at(f, j);
      if (!r.allFinite()) throw std::invalid_argument("GestureSequence: non-finite rotation entry");
      const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
      const double det = r.determinant();
      if (ortho > tol || std::abs(det - 1.0) > tol) {
        throw std::invalid_argument("GestureSequence: block (" + std::to_string(f) + ", " +
                                    std::to_string(j) + ") is not a rotation");
      }
    }
  }
}

Mat flatten(const GestureSequence& seq) {
  const int joints = seq.joints();
  Mat out(seq.frames(), joints * 9);
  for (int f = 0; f < seq.frames(); ++f) {
    for (int j = 0; j < joints; ++j) {
      const Mat3& r = seq.at(f, j);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) out(f, j * 9 + a * 3 + b) = r(a, b);
      }
    }
  }
  return out;
}

GestureSequence unflatten(const Mat& values, const SkeletonLayout& layout, double fps) {
  if (values.cols() != layout.feature_width()) {
    throw std::invalid_argument("unflatten: width " + std::to_string(values.cols()) +
                                " does not match layout width " + std::to_string(layout.feature_width()));
  }
  GestureSequence seq(layout, static_cast<int>(values.rows()), fps);
  for (int f = 0; f < seq.frames(); ++f) {
    for (int j = 0; j < layout.joint_count; ++j) {
      Mat3& r = seq.at(f, j);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) r(a, b) = values(f, j * 9 + a * 3 + b);
      }
    }
  }
  return seq;
}

GestureSequence to_rotations(const Mat& values, const SkeletonLayout& layout, double fps) {
  GestureSequence seq = unflatten(values, layout, fps);
  for (int f = 0; f < seq.frames(); ++f) {
    for (int j = 0; j < seq.joints(); ++j) seq.at(f, j) = project_to_so3(seq.at(f, j));
  }
  return seq;
}

GestureSequence resample(const GestureSequence& seq, double target_fps) {
  if (!(target_fps > 0.0)) throw std::invalid_argument("resample: target fps must be positive");
  const double ratio = seq.fps() / target_fps;
  const double step_rounded = std::round(ratio);
  if (step_rounded < 1.0 || std::abs(ratio - step_rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("resample: unsupported ratio " + std::to_string(ratio) +
                                " (source fps must be an integer multiple of target fps)");
  }
  const int step = static_cast<int>(step_rounded);
  if (step == 1) return seq;
  const int frames = seq.frames() / step;
  if (frames == 0) throw std::invalid_argument("resample: sequence too short for ratio");
  GestureSequence out(seq.layout(), frames, target_fps);
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < seq.joints(); ++j) out.at(f, j) = seq.at(f * step, j);
  }
  return out;
}

std::vector<double> joint_angular_speed(const GestureSequence& seq, int joint) {
  std::vector<double> speed;
  if (seq.frames() < 2) return speed;
  speed.resize(static_cast<std::size_t>(seq.frames()));
  for (int f = 0; f + 1 < seq.frames(); ++f) {
    speed[f] = geodesic_distance(seq.at(f, joint), seq.at(f + 1, joint)) * seq.fps();
  }
  speed.back() = speed[speed.size() - 2];
  return speed;
}

std::vector<double> mean_angular_speed(const GestureSequence& seq) {
  std::vector<double> speed;
  if (seq.frames() < 2) return speed;
  speed.assign(static_cast<std::size_t>(seq.frames()), 0.0);
  for (int j = 0; j < seq.joints(); ++j) {
    const auto js = joint_angular_speed(seq, j);
    for (std::size_t f = 0; f < js.size(); ++f) speed[f] += js[f];
  }
  for (double& s : speed) s /= seq.joints();
  return speed;
}

}  // namespace mdta2g
