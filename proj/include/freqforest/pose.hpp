#pragma once

// Articulated pose tracks: 26 -> 15 joint conversion, pose/box matching,
// unit-square standardization and the 15 pose feature series.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqforest/errors.hpp"
#include "freqforest/flow.hpp"
#include "freqforest/spectral.hpp"

namespace freqforest {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::size_t kRawJointCount = 26;
inline constexpr std::size_t kJointCount = 15;

enum class Joint : std::size_t {
  Head = 0,
  Neck,
  Torso,
  LeftShoulder,
  LeftElbow,
  LeftHand,
  RightShoulder,
  RightElbow,
  RightHand,
  LeftHip,
  LeftKnee,
  LeftFoot,
  RightHip,
  RightKnee,
  RightFoot
};

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "head",     "neck",      "torso",     "left_shoulder", "left_elbow", "left_hand",  "right_shoulder", "right_elbow",
    "right_hand", "left_hip", "left_knee", "left_foot",     "right_hip",  "right_knee", "right_foot"};

inline std::optional<Joint> joint_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kJointCount; ++i) {
    if (kJointNames[i] == name) return static_cast<Joint>(i);
  }
  return std::nullopt;
}

// One detector output: 26 joints plus an overall detection score.
struct RawPose {
  std::array<Point, kRawJointCount> joints{};
  double score = 0.0;
};

struct Pose15 {
  std::array<Point, kJointCount> joints{};

  const Point& operator[](Joint j) const { return joints[static_cast<std::size_t>(j)]; }
  Point& operator[](Joint j) { return joints[static_cast<std::size_t>(j)]; }
  friend bool operator==(const Pose15&, const Pose15&) = default;
};

// Each target joint is the mean of its listed raw-joint positions.
struct JointMap {
  std::array<std::vector<std::size_t>, kJointCount> sources{};

  void validate() const {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (sources[j].empty()) {
        throw ArgumentError("joint map: target '" + std::string(kJointNames[j]) + "' has no source joints");
      }
      for (std::size_t s : sources[j]) {
        if (s >= kRawJointCount) {
          throw ArgumentError("joint map: source index " + std::to_string(s) + " for target '" +
                              std::string(kJointNames[j]) + "' is out of range 0..25");
        }
      }
    }
  }
};

// Raw joint order assumed by the shipped map (data/joint_map_26to15.txt):
//  0 head  1 neck  2 l_shoulder  3 l_upper_arm  4 l_elbow  5 l_forearm
//  6 l_hand  7 l_chest  8 l_belly  9 l_hip  10 l_thigh  11 l_knee  12 l_shin
// 13 l_foot  14 r_shoulder  15 r_upper_arm  16 r_elbow  17 r_forearm  18 r_hand
// 19 r_chest  20 r_belly  21 r_hip  22 r_thigh  23 r_knee  24 r_shin  25 r_foot
inline JointMap default_joint_map() {
  JointMap map;
  auto set = [&](Joint j, std::vector<std::size_t> src) { map.sources[static_cast<std::size_t>(j)] = std::move(src); };
  set(Joint::Head, {0});
  set(Joint::Neck, {1});
  set(Joint::Torso, {7, 8, 19, 20});
  set(Joint::LeftShoulder, {2});
  set(Joint::LeftElbow, {4});
  set(Joint::LeftHand, {6});
  set(Joint::RightShoulder, {14});
  set(Joint::RightElbow, {16});
  set(Joint::RightHand, {18});
  set(Joint::LeftHip, {9});
  set(Joint::LeftKnee, {11});
  set(Joint::LeftFoot, {13});
  set(Joint::RightHip, {21});
  set(Joint::RightKnee, {23});
  set(Joint::RightFoot, {25});
  return map;
}

inline Pose15 convert_pose(const RawPose& raw, const JointMap& map) {
  map.validate();
  Pose15 pose;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    Point sum;
    for (std::size_t s : map.sources[j]) {
      sum.x += raw.joints[s].x;
      sum.y += raw.joints[s].y;
    }
    const auto n = static_cast<double>(map.sources[j].size());
    pose.joints[j] = {sum.x / n, sum.y / n};
  }
  return pose;
}

inline constexpr double kFitBoxMargin = 0.1;

// At least 80% of the joints inside the box grown by 10% of w and h per side.
inline bool pose_fits_box(std::span<const Point> joints, const BoundingBox& box) {
  const double mx = kFitBoxMargin * box.w;
  const double my = kFitBoxMargin * box.h;
  const double x0 = box.x - mx, x1 = box.x + box.w + mx;
  const double y0 = box.y - my, y1 = box.y + box.h + my;
  std::size_t inside = 0;
  for (const Point& p : joints) {
    if (p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) ++inside;
  }
  return inside * 5 >= joints.size() * 4;
}

// Highest-scoring candidate that fits the box; earlier candidates win ties.
// Works for any candidate type exposing `joints` and `score`.
template <std::ranges::forward_range Candidates>
std::optional<std::ranges::range_value_t<Candidates>> select_best_pose(const Candidates& candidates,
                                                                       const BoundingBox& box) {
  const std::ranges::range_value_t<Candidates>* best = nullptr;
  for (const auto& c : candidates) {
    if (!pose_fits_box(c.joints, box)) continue;
    if (best == nullptr || c.score > best->score) best = &c;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

// Translates the joints' bounding rectangle to the origin and scales by the
// larger extent, preserving aspect ratio.
inline Pose15 standardize_pose(const Pose15& pose) {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const Point& p : pose.joints) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DomainError("standardize_pose: non-finite joint coordinate");
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double extent = std::max(max_x - min_x, max_y - min_y);
  Pose15 out;
  if (extent == 0.0) {
    out.joints.fill({0.5, 0.5});
    return out;
  }
  for (std::size_t j = 0; j < kJointCount; ++j) {
    out.joints[j] = {(pose.joints[j].x - min_x) / extent, (pose.joints[j].y - min_y) / extent};
  }
  return out;
}

// Interior angle at `vertex` between the segments to `a` and `c`, in [0, pi].
// A zero-length segment gives 0.
inline double joint_angle(const Point& a, const Point& vertex, const Point& c) {
  const double ax = a.x - vertex.x, ay = a.y - vertex.y;
  const double cx = c.x - vertex.x, cy = c.y - vertex.y;
  return std::atan2(std::abs(ax * cy - ay * cx), ax * cx + ay * cy);
}

// Per-frame pose, absent where no detection matched the box.
struct PoseTrack {
  std::vector<std::optional<Pose15>> frames;

  std::size_t frame_count() const noexcept { return frames.size(); }
  std::size_t matched_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const auto& f) { return f.has_value(); }));
  }
};

// Fills missing samples linearly between the nearest known neighbours;
// leading and trailing gaps copy the nearest known value.
inline TimeSeries interpolate_gaps(std::span<const std::optional<double>> samples) {
  const std::size_t n = samples.size();
  TimeSeries out(n);
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < n; ++i) {
    if (!samples[i]) continue;
    out[i] = *samples[i];
    if (!prev) {
      for (std::size_t j = 0; j < i; ++j) out[j] = out[i];
    } else {
      const std::size_t gap = i - *prev;
      for (std::size_t j = *prev + 1; j < i; ++j) {
        const double t = static_cast<double>(j - *prev) / static_cast<double>(gap);
        out[j] = out[*prev] + t * (out[i] - out[*prev]);
      }
    }
    prev = i;
  }
  if (!prev) throw DomainError("interpolate_gaps: no known samples");
  for (std::size_t j = *prev + 1; j < n; ++j) out[j] = out[*prev];
  return out;
}

inline constexpr std::size_t kPoseFeatureCount = 15;

inline constexpr std::array<std::string_view, kPoseFeatureCount> kPoseFeatureNames = {
    "lhand_lshoulder_dx",  "lhand_lshoulder_dy",   "rhand_rshoulder_dx", "rhand_rshoulder_dy", "left_elbow_angle",
    "right_elbow_angle",   "left_shoulder_angle",  "right_shoulder_angle", "left_knee_angle",  "right_knee_angle",
    "lfoot_torso_dy",      "rfoot_torso_dy",       "feet_dx",            "hands_dx",           "head_torso_dy"};

inline std::vector<std::string> pose_feature_names() { return {kPoseFeatureNames.begin(), kPoseFeatureNames.end()}; }

// The 15 scalar features of one standardized pose, in kPoseFeatureNames order.
// Displacements are first-named joint minus second; angles in radians.
inline std::array<double, kPoseFeatureCount> pose_frame_features(const Pose15& p) {
  using J = Joint;
  return {
      p[J::LeftHand].x - p[J::LeftShoulder].x,
      p[J::LeftHand].y - p[J::LeftShoulder].y,
      p[J::RightHand].x - p[J::RightShoulder].x,
      p[J::RightHand].y - p[J::RightShoulder].y,
      joint_angle(p[J::LeftShoulder], p[J::LeftElbow], p[J::LeftHand]),
      joint_angle(p[J::RightShoulder], p[J::RightElbow], p[J::RightHand]),
      joint_angle(p[J::Neck], p[J::LeftShoulder], p[J::LeftElbow]),
      joint_angle(p[J::Neck], p[J::RightShoulder], p[J::RightElbow]),
      joint_angle(p[J::LeftHip], p[J::LeftKnee], p[J::LeftFoot]),
      joint_angle(p[J::RightHip], p[J::RightKnee], p[J::RightFoot]),
      p[J::LeftFoot].y - p[J::Torso].y,
      p[J::RightFoot].y - p[J::Torso].y,
      p[J::LeftFoot].x - p[J::RightFoot].x,
      p[J::LeftHand].x - p[J::RightHand].x,
      p[J::Head].y - p[J::Torso].y,
  };
}

// Interpolate gaps, smooth each joint coordinate, standardize every frame,
// then derive the 15 features.
inline SeriesSet pose_feature_series(const PoseTrack& track, std::size_t smoothing_window = kDefaultSmoothingWindow) {
  const std::size_t frames = track.frame_count();
  if (track.matched_count() == 0) throw DomainError("pose_feature_series: track has no matched frames");

  std::vector<Pose15> poses(frames);
  std::vector<std::optional<double>> samples(frames);
  for (std::size_t j = 0; j < kJointCount; ++j) {
    for (int axis = 0; axis < 2; ++axis) {
      for (std::size_t t = 0; t < frames; ++t) {
        const auto& f = track.frames[t];
        samples[t] = f ? std::optional<double>(axis == 0 ? f->joints[j].x : f->joints[j].y) : std::nullopt;
      }
      const TimeSeries coord = smooth(interpolate_gaps(samples), smoothing_window);
      for (std::size_t t = 0; t < frames; ++t) (axis == 0 ? poses[t].joints[j].x : poses[t].joints[j].y) = coord[t];
    }
  }

  SeriesSet set;
  for (auto name : kPoseFeatureNames) set.push_back({std::string(name), TimeSeries(frames)});
  for (std::size_t t = 0; t < frames; ++t) {
    const auto values = pose_frame_features(standardize_pose(poses[t]));
    for (std::size_t f = 0; f < kPoseFeatureCount; ++f) set[f].values[t] = values[f];
  }
  return set;
}

}  // namespace freqforest
