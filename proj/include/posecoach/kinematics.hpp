// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posecoach/errors.hpp"
#include "posecoach/normalization.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

// Bone neighbours of the angle-bearing joints. The interior angle at a joint
// is measured between the bones to these two neighbours.
inline std::optional<std::pair<JointId, JointId>> angle_neighbors(JointId j) {
  using J = JointId;
  switch (j) {
    case J::kLeftElbow: return std::pair{J::kLeftShoulder, J::kLeftWrist};
    case J::kRightElbow: return std::pair{J::kRightShoulder, J::kRightWrist};
    case J::kLeftKnee: return std::pair{J::kLeftHip, J::kLeftAnkle};
    case J::kRightKnee: return std::pair{J::kRightHip, J::kRightAnkle};
    case J::kLeftShoulder: return std::pair{J::kLeftElbow, J::kLeftHip};
    case J::kRightShoulder: return std::pair{J::kRightElbow, J::kRightHip};
    case J::kLeftHip: return std::pair{J::kLeftShoulder, J::kLeftKnee};
    case J::kRightHip: return std::pair{J::kRightShoulder, J::kRightKnee};
    default: return std::nullopt;
  }
}

inline bool is_angle_bearing(JointId j) { return angle_neighbors(j).has_value(); }

inline const std::vector<JointId>& angle_bearing_joints() {
  static const std::vector<JointId> joints = [] {
    std::vector<JointId> out;
    for (JointId j : all_joints()) {
      if (is_angle_bearing(j)) out.push_back(j);
    }
    return out;
  }();
  return joints;
}

// The neighbour further from the torso: wrist for an elbow, elbow for a
// shoulder, ankle for a knee, knee for a hip.
inline std::optional<JointId> distal_neighbor(JointId j) {
  using J = JointId;
  switch (j) {
    case J::kLeftElbow: return J::kLeftWrist;
    case J::kRightElbow: return J::kRightWrist;
    case J::kLeftKnee: return J::kLeftAnkle;
    case J::kRightKnee: return J::kRightAnkle;
    case J::kLeftShoulder: return J::kLeftElbow;
    case J::kRightShoulder: return J::kRightElbow;
    case J::kLeftHip: return J::kLeftKnee;
    case J::kRightHip: return J::kRightKnee;
    default: return std::nullopt;
  }
}

// Interior angle at `at` in degrees, in [0, 180]. atan2 of cross and dot
// keeps full precision near 0 and 180 where acos loses it.
inline std::optional<double> interior_angle(Vec2 at, Vec2 a, Vec2 b) {
  const Vec2 u = a - at;
  const Vec2 v = b - at;
  if (norm(u) == 0.0 || norm(v) == 0.0) return std::nullopt;
  return rad2deg(std::atan2(std::abs(cross(u, v)), dot(u, v)));
}

namespace detail {

[[noreturn]] inline void throw_no_topology(JointId j) {
  throw ValidationError("joint " + std::string(name(j)) + " has no angle (end joint)");
}

}  // namespace detail

// Angle at `joint`, or nullopt when the joint or a neighbour is occluded or a
// bone has zero length.
inline std::optional<double> try_joint_angle(const CanonicalSkeleton& skel, JointId joint) {
  const auto nb = angle_neighbors(joint);
  if (!nb) detail::throw_no_topology(joint);
  if (skel.is_occluded(joint) || skel.is_occluded(nb->first) || skel.is_occluded(nb->second)) {
    return std::nullopt;
  }
  return interior_angle(skel[joint], skel[nb->first], skel[nb->second]);
}

inline std::optional<double> try_joint_angle(const Frame& f, JointId joint,
                                             double occlusion_threshold =
                                                 kDefaultOcclusionThreshold) {
  const auto nb = angle_neighbors(joint);
  if (!nb) detail::throw_no_topology(joint);
  if (f.occluded(joint, occlusion_threshold) || f.occluded(nb->first, occlusion_threshold) ||
      f.occluded(nb->second, occlusion_threshold)) {
    return std::nullopt;
  }
  return interior_angle(f[joint], f[nb->first], f[nb->second]);
}

inline double joint_angle(const CanonicalSkeleton& skel, JointId joint) {
  const auto a = try_joint_angle(skel, joint);
  if (!a) {
    throw DegenerateError("frame '" + skel.frame_id + "': angle at " + std::string(name(joint)) +
                          " undefined (occluded or zero-length bone)");
  }
  return *a;
}

// One direction vector between two targeted joints.
struct JointVector {
  JointId from;
  JointId to;
  Vec2 dir;  // unit length
};

struct JointVectorField {
  std::string frame_id;
  std::vector<JointId> joints;   // requested targeted set, ascending
  std::vector<JointId> dropped;  // occluded joints left out
  std::vector<std::pair<JointId, JointId>> skipped;  // coincident pairs
  std::vector<JointVector> vectors;

  std::size_t usable_joints() const { return joints.size() - dropped.size(); }
};

inline std::vector<JointId> sorted_unique(std::vector<JointId> joints) {
  std::sort(joints.begin(), joints.end());
  joints.erase(std::unique(joints.begin(), joints.end()), joints.end());
  return joints;
}

inline constexpr double kCoincidentEps = 1e-12;

// Unit vectors for every ordered pair of usable targeted joints, ordered by
// (from, to) ascending. N usable joints give N*(N-1) vectors unless some pair
// coincides.
inline JointVectorField joint_vectors(const CanonicalSkeleton& skel,
                                      const std::vector<JointId>& targeted) {
  JointVectorField field;
  field.frame_id = skel.frame_id;
  field.joints = sorted_unique(targeted);

  std::vector<JointId> usable;
  for (JointId j : field.joints) {
    if (skel.is_occluded(j)) {
      field.dropped.push_back(j);
    } else {
      usable.push_back(j);
    }
  }
  if (usable.size() < 2) {
    throw DegenerateError("frame '" + skel.frame_id + "': fewer than 2 usable targeted joints");
  }

  field.vectors.reserve(usable.size() * (usable.size() - 1));
  for (JointId a : usable) {
    for (JointId b : usable) {
      if (a == b) continue;
      const Vec2 d = skel[b] - skel[a];
      const double len = norm(d);
      if (len < kCoincidentEps) {
        field.skipped.emplace_back(a, b);
        continue;
      }
      field.vectors.push_back({a, b, d / len});
    }
  }
  return field;
}

// Mean cosine similarity over the pairs present in both fields. Pairs missing
// from either side (occlusion, coincidence) are left out.
inline double frame_cosine(const JointVectorField& a, const JointVectorField& b) {
  if (a.joints != b.joints) {
    throw ValidationError("frame_cosine: targeted joint sets differ ('" + a.frame_id + "' vs '" +
                          b.frame_id + "')");
  }
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t i = 0;
  std::size_t k = 0;
  const auto key = [](const JointVector& v) { return std::pair{v.from, v.to}; };
  while (i < a.vectors.size() && k < b.vectors.size()) {
    const auto ka = key(a.vectors[i]);
    const auto kb = key(b.vectors[k]);
    if (ka < kb) {
      ++i;
    } else if (kb < ka) {
      ++k;
    } else {
      sum += dot(a.vectors[i].dir, b.vectors[k].dir);
      ++n;
      ++i;
      ++k;
    }
  }
  if (n == 0) {
    throw DegenerateError("frame_cosine: no common joint pairs between '" + a.frame_id +
                          "' and '" + b.frame_id + "'");
  }
  return std::clamp(sum / static_cast<double>(n), -1.0, 1.0);
}

struct KeyJoint {
  JointId joint;
  double deviation_deg;
};

// Angle-bearing joints whose angle changes by at least threshold_deg between
// the first and last frame, largest change first.
inline std::vector<KeyJoint> rank_key_joints(const Sequence& seq, double threshold_deg,
                                             const NormalizeOptions& opts = {}) {
  const CanonicalSkeleton first = normalize_global(seq.frames.front(), opts);
  const CanonicalSkeleton last = normalize_global(seq.frames.back(), opts);
  std::vector<KeyJoint> ranked;
  bool any = false;
  for (JointId j : angle_bearing_joints()) {
    const auto a0 = try_joint_angle(first, j);
    const auto a1 = try_joint_angle(last, j);
    if (!a0 || !a1) continue;
    any = true;
    const double dev = std::abs(*a1 - *a0);
    if (dev >= threshold_deg) ranked.push_back({j, dev});
  }
  if (!any) throw DegenerateError("no angle-bearing joint computable in first/last frame");
  std::stable_sort(ranked.begin(), ranked.end(), [](const KeyJoint& x, const KeyJoint& y) {
    return x.deviation_deg > y.deviation_deg;
  });
  return ranked;
}

inline std::vector<JointId> select_key_joints(const Sequence& seq, double threshold_deg,
                                              const NormalizeOptions& opts = {}) {
  std::vector<JointId> out;
  for (const KeyJoint& k : rank_key_joints(seq, threshold_deg, opts)) out.push_back(k.joint);
  return out;
}

struct RomViolation {
  std::string frame_id;
  JointId joint;
  double angle_deg;
  friend bool operator==(const RomViolation&, const RomViolation&) = default;
};

inline std::vector<RomViolation> rom_check(const Sequence& seq,
                                           const std::map<JointId, AngleRange>& limits,
                                           double occlusion_threshold =
                                               kDefaultOcclusionThreshold) {
  std::vector<RomViolation> out;
  for (const Frame& f : seq.frames) {
    for (const auto& [joint, range] : limits) {
      if (!is_angle_bearing(joint)) continue;
      const auto a = try_joint_angle(f, joint, occlusion_threshold);
      if (a && !range.contains(*a)) out.push_back({f.id, joint, *a});
    }
  }
  return out;
}

// Per-frame angle of one joint; gaps (occlusion) are filled from the nearest
// earlier value, or the first valid one for a leading gap.
inline std::vector<double> angle_series(const Sequence& seq, JointId joint,
                                        double occlusion_threshold = kDefaultOcclusionThreshold) {
  std::vector<std::optional<double>> raw;
  raw.reserve(seq.size());
  for (const Frame& f : seq.frames) raw.push_back(try_joint_angle(f, joint, occlusion_threshold));
  const auto first = std::find_if(raw.begin(), raw.end(), [](const auto& a) { return a; });
  if (first == raw.end()) {
    throw DegenerateError("angle at " + std::string(name(joint)) + " never computable");
  }
  std::vector<double> out(raw.size());
  double last = **first;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i]) last = *raw[i];
    out[i] = last;
  }
  return out;
}

}  // namespace posecoach
