// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posecoach/errors.hpp"

namespace posecoach {

inline constexpr std::size_t kNumJoints = 17;

// COCO keypoint order; the integer codes are part of the file format.
enum class JointId : std::uint8_t {
  kNose = 0,
  kLeftEye = 1,
  kRightEye = 2,
  kLeftEar = 3,
  kRightEar = 4,
  kLeftShoulder = 5,
  kRightShoulder = 6,
  kLeftElbow = 7,
  kRightElbow = 8,
  kLeftWrist = 9,
  kRightWrist = 10,
  kLeftHip = 11,
  kRightHip = 12,
  kLeftKnee = 13,
  kRightKnee = 14,
  kLeftAnkle = 15,
  kRightAnkle = 16,
};

inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "nose",           "left_eye",       "right_eye",  "left_ear",
    "right_ear",      "left_shoulder",  "right_shoulder",
    "left_elbow",     "right_elbow",    "left_wrist", "right_wrist",
    "left_hip",       "right_hip",      "left_knee",  "right_knee",
    "left_ankle",     "right_ankle",
};

constexpr std::size_t index(JointId j) { return static_cast<std::size_t>(j); }
constexpr JointId joint_at(std::size_t i) { return static_cast<JointId>(i); }
constexpr std::string_view name(JointId j) { return kJointNames[index(j)]; }

inline std::array<JointId, kNumJoints> all_joints() {
  std::array<JointId, kNumJoints> out{};
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = joint_at(i);
  return out;
}

inline std::optional<JointId> parse_joint(std::string_view s) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (kJointNames[i] == s) return joint_at(i);
  }
  return std::nullopt;
}

// "left_knee" -> "knee"; unsided joints are returned unchanged.
inline std::string_view side_agnostic_name(JointId j) {
  std::string_view n = name(j);
  if (n.rfind("left_", 0) == 0) return n.substr(5);
  if (n.rfind("right_", 0) == 0) return n.substr(6);
  return n;
}

// Accepts a full joint name or a side-agnostic one ("knee" -> both knees,
// "eye" -> both eyes).
inline std::vector<JointId> parse_joint_group(std::string_view s) {
  if (auto j = parse_joint(s)) return {*j};
  std::vector<JointId> out;
  for (std::string_view side : {"left_", "right_"}) {
    std::string full(side);
    full += s;
    if (auto j = parse_joint(full)) out.push_back(*j);
  }
  if (out.empty()) {
    throw ValidationError("unknown joint name '" + std::string(s) + "'");
  }
  return out;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double k) { return {k * a.x, k * a.y}; }
  friend constexpr Vec2 operator/(Vec2 a, double k) { return {a.x / k, a.y / k}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 midpoint(Vec2 a, Vec2 b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

// Counter-clockwise rotation in a y-up frame.
inline Vec2 rotate(Vec2 v, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

inline constexpr double kDefaultOcclusionThreshold = 0.05;

struct Frame {
  std::string id;
  double timestamp = 0.0;  // seconds
  std::array<Vec2, kNumJoints> points{};
  std::array<double, kNumJoints> confidence{};

  const Vec2& operator[](JointId j) const { return points[index(j)]; }
  Vec2& operator[](JointId j) { return points[index(j)]; }

  bool occluded(JointId j, double threshold = kDefaultOcclusionThreshold) const {
    return confidence[index(j)] < threshold;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

enum class ClassLabel { kGroundTruth, kCorrect, kWrong };

inline std::string_view to_string(ClassLabel c) {
  switch (c) {
    case ClassLabel::kGroundTruth: return "groundtruth";
    case ClassLabel::kCorrect: return "correct";
    case ClassLabel::kWrong: return "wrong";
  }
  return "groundtruth";
}

// Short tag used in report names, e.g. "bench_press(W)".
inline std::string_view short_tag(ClassLabel c) {
  switch (c) {
    case ClassLabel::kGroundTruth: return "GT";
    case ClassLabel::kCorrect: return "C";
    case ClassLabel::kWrong: return "W";
  }
  return "GT";
}

inline ClassLabel parse_class_label(std::string_view s) {
  if (s == "groundtruth" || s == "gt" || s == "GT") return ClassLabel::kGroundTruth;
  if (s == "correct" || s == "C" || s == "c") return ClassLabel::kCorrect;
  if (s == "wrong" || s == "W" || s == "w") return ClassLabel::kWrong;
  throw ValidationError("unknown sequence class '" + std::string(s) + "'");
}

struct Sequence {
  std::string exercise_id;
  ClassLabel label = ClassLabel::kGroundTruth;
  std::optional<double> fps;
  std::vector<Frame> frames;

  std::size_t size() const { return frames.size(); }
  const Frame& operator[](std::size_t i) const { return frames[i]; }
  double duration() const { return frames.back().timestamp - frames.front().timestamp; }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

// Throws ValidationError naming the offending frame.
inline void validate(const Frame& f, std::size_t frame_index) {
  const auto where = [&] {
    return "frame " + std::to_string(frame_index) + " ('" + f.id + "')";
  };
  if (!std::isfinite(f.timestamp) || f.timestamp < 0.0) {
    throw ValidationError(where() + ": timestamp must be finite and >= 0");
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const Vec2 p = f.points[j];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError(where() + ": non-finite coordinate for " +
                            std::string(kJointNames[j]));
    }
    const double c = f.confidence[j];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw ValidationError(where() + ": confidence outside [0,1] for " +
                            std::string(kJointNames[j]));
    }
  }
}

inline void validate(const Sequence& s) {
  if (s.frames.size() < 2) {
    throw ValidationError("sequence '" + s.exercise_id + "' needs at least 2 frames, has " +
                          std::to_string(s.frames.size()));
  }
  if (s.fps && !(*s.fps > 0.0 && std::isfinite(*s.fps))) {
    throw ValidationError("fps must be positive");
  }
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    validate(s.frames[i], i);
    if (i > 0 && !(s.frames[i].timestamp > s.frames[i - 1].timestamp)) {
      throw ValidationError("non-monotone timestamp at frame " + std::to_string(i) + " ('" +
                            s.frames[i].id + "')");
    }
  }
}

struct AngleRange {
  double min_deg = 0.0;
  double max_deg = 180.0;

  double span() const { return max_deg - min_deg; }
  bool contains(double a) const { return a >= min_deg && a <= max_deg; }
  friend bool operator==(const AngleRange&, const AngleRange&) = default;
};

struct MistakeNote {
  std::string frame_id;
  JointId joint = JointId::kNose;
  std::string note;
  friend bool operator==(const MistakeNote&, const MistakeNote&) = default;
};

struct ScoreTriple {
  double joint = 0.0;
  double pace = 0.0;
  double range = 0.0;
  friend bool operator==(const ScoreTriple&, const ScoreTriple&) = default;
};

struct Annotation {
  std::string exercise_id;
  std::vector<JointId> targeted_joints;
  std::map<JointId, AngleRange> reference_angles;
  std::map<JointId, AngleRange> rom_limits;
  std::vector<MistakeNote> per_frame_mistakes;
  std::optional<ScoreTriple> scores;  // 0-100 each

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

inline void validate(const Annotation& a) {
  const auto check = [](const std::map<JointId, AngleRange>& m, std::string_view what) {
    for (const auto& [j, r] : m) {
      if (!(r.min_deg <= r.max_deg) || !std::isfinite(r.min_deg) || !std::isfinite(r.max_deg)) {
        throw ValidationError(std::string(what) + " for " + std::string(name(j)) +
                              " has min > max");
      }
    }
  };
  check(a.reference_angles, "reference_angles");
  check(a.rom_limits, "rom_limits");
  if (a.scores) {
    for (double v : {a.scores->joint, a.scores->pace, a.scores->range}) {
      if (!(v >= 0.0 && v <= 100.0)) throw ValidationError("annotation score outside [0,100]");
    }
  }
}

// Interior-angle anatomical limits. Straight limb = 180.
inline std::map<JointId, AngleRange> default_rom_table() {
  return {
      {JointId::kLeftElbow, {20.0, 180.0}},    {JointId::kRightElbow, {20.0, 180.0}},
      {JointId::kLeftKnee, {20.0, 180.0}},     {JointId::kRightKnee, {20.0, 180.0}},
      {JointId::kLeftHip, {50.0, 180.0}},      {JointId::kRightHip, {50.0, 180.0}},
      {JointId::kLeftShoulder, {0.0, 180.0}},  {JointId::kRightShoulder, {0.0, 180.0}},
  };
}

}  // namespace posecoach
