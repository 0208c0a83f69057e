// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "posecoach/errors.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += a[i][k] * b[k][j];
      out[i][j] = acc;
    }
  }
  return out;
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Similarity map from pixel space to canonical space:
//
//   canonical = R(theta) * (scale * (pixel - center)) + offset
//
// Canonical space is y-up with unit torso length; pixel space is y-down.
// The rotation is chosen so the hip-to-shoulder axis lands on +y, which
// absorbs the axis flip without a reflection.
struct NormalizationTransform {
  double theta = 0.0;
  Vec2 offset{};  // canonical anchor, canonical units
  double scale = 1.0;  // 1 / torso pixels
  Vec2 center{};  // pixels

  Vec2 apply(Vec2 p) const { return rotate(scale * (p - center), theta) + offset; }

  Vec2 invert(Vec2 q) const { return center + rotate(q - offset, -theta) / scale; }

  // Homogeneous matrix, composed in closed form.
  Mat3 matrix() const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {{{scale * c, -scale * s, offset.x - scale * (c * center.x - s * center.y)},
             {scale * s, scale * c, offset.y - scale * (s * center.x + c * center.y)},
             {0.0, 0.0, 1.0}}};
  }

  // The same map as a product of elementary blocks:
  // translate(offset) * rotate(theta) * scale(s) * translate(-center).
  Mat3 factored_matrix() const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Mat3 to_anchor{{{1, 0, offset.x}, {0, 1, offset.y}, {0, 0, 1}}};
    const Mat3 rot{{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
    const Mat3 scl{{{scale, 0, 0}, {0, scale, 0}, {0, 0, 1}}};
    const Mat3 from_center{{{1, 0, -center.x}, {0, 1, -center.y}, {0, 0, 1}}};
    return matmul(to_anchor, matmul(rot, matmul(scl, from_center)));
  }

  friend bool operator==(const NormalizationTransform&, const NormalizationTransform&) = default;
};

inline Vec2 apply(const Mat3& m, Vec2 p) {
  return {m[0][0] * p.x + m[0][1] * p.y + m[0][2], m[1][0] * p.x + m[1][1] * p.y + m[1][2]};
}

struct CanonicalSkeleton {
  std::string frame_id;
  std::array<Vec2, kNumJoints> points{};
  std::array<bool, kNumJoints> occluded{};
  NormalizationTransform transform;

  const Vec2& operator[](JointId j) const { return points[index(j)]; }
  bool is_occluded(JointId j) const { return occluded[index(j)]; }
};

struct NormalizeOptions {
  double occlusion_threshold = kDefaultOcclusionThreshold;
};

inline constexpr double kMinTorsoPixels = 1e-6;

inline Vec2 shoulder_midpoint(const Frame& f) {
  return midpoint(f[JointId::kLeftShoulder], f[JointId::kRightShoulder]);
}

inline Vec2 hip_midpoint(const Frame& f) {
  return midpoint(f[JointId::kLeftHip], f[JointId::kRightHip]);
}

inline double torso_length(const Frame& f, const NormalizeOptions& opts = {}) {
  for (JointId j : {JointId::kLeftShoulder, JointId::kRightShoulder, JointId::kLeftHip,
                    JointId::kRightHip}) {
    if (f.occluded(j, opts.occlusion_threshold)) {
      throw DegenerateError("frame '" + f.id + "': " + std::string(name(j)) +
                            " occluded, torso undefined");
    }
  }
  const double len = distance(shoulder_midpoint(f), hip_midpoint(f));
  if (!(len >= kMinTorsoPixels)) {
    throw DegenerateError("frame '" + f.id + "': degenerate torso (length " +
                          std::to_string(len) + " px)");
  }
  return len;
}

namespace detail {

// Rotation and scale shared by global and local normalization.
struct UprightFrame {
  double theta;
  double scale;
};

inline UprightFrame upright(const Frame& f, const NormalizeOptions& opts) {
  const double torso = torso_length(f, opts);
  const Vec2 axis = shoulder_midpoint(f) - hip_midpoint(f);
  const double heading = std::atan2(axis.y, axis.x);
  return {wrap_angle(kPi / 2.0 - heading), 1.0 / torso};
}

inline CanonicalSkeleton apply_transform(const Frame& f, const NormalizationTransform& t,
                                         const NormalizeOptions& opts) {
  CanonicalSkeleton out;
  out.frame_id = f.id;
  out.transform = t;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    out.points[j] = t.apply(f.points[j]);
    out.occluded[j] = f.confidence[j] < opts.occlusion_threshold;
  }
  return out;
}

}  // namespace detail

// Body center (bounding-box diagonal intersection of visible joints, taken in
// the upright frame) at the origin, torso along +y, unit torso length.
inline CanonicalSkeleton normalize_global(const Frame& f, const NormalizeOptions& opts = {}) {
  const auto [theta, scale] = detail::upright(f, opts);

  std::size_t visible = 0;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (f.confidence[j] >= opts.occlusion_threshold) ++visible;
  }
  if (visible < 3) {
    throw DegenerateError("frame '" + f.id + "': fewer than 3 visible joints");
  }

  // Bounding box in the upright frame, so the center does not depend on the
  // input orientation.
  const Vec2 pivot = hip_midpoint(f);
  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (f.confidence[j] < opts.occlusion_threshold) continue;
    const Vec2 q = rotate(scale * (f.points[j] - pivot), theta);
    lo_x = std::min(lo_x, q.x);
    hi_x = std::max(hi_x, q.x);
    lo_y = std::min(lo_y, q.y);
    hi_y = std::max(hi_y, q.y);
  }
  const Vec2 box_center{0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y)};

  NormalizationTransform t;
  t.theta = theta;
  t.scale = scale;
  t.center = pivot + rotate(box_center, -theta) / scale;
  t.offset = {0.0, 0.0};
  return detail::apply_transform(f, t, opts);
}

// Same rotation and scale as the global view, but the root joint is pinned to
// the anchor so limb directions can be compared across recordings.
inline CanonicalSkeleton normalize_local(const Frame& f, JointId root, Vec2 anchor = {},
                                         const NormalizeOptions& opts = {}) {
  if (f.occluded(root, opts.occlusion_threshold)) {
    throw DegenerateError("frame '" + f.id + "': root joint " + std::string(name(root)) +
                          " occluded");
  }
  const auto [theta, scale] = detail::upright(f, opts);
  NormalizationTransform t;
  t.theta = theta;
  t.scale = scale;
  t.center = f[root];
  t.offset = anchor;
  return detail::apply_transform(f, t, opts);
}

inline Vec2 invert(const NormalizationTransform& t, Vec2 canonical) {
  return t.invert(canonical);
}

inline std::vector<CanonicalSkeleton> normalize_all(const Sequence& s,
                                                    const NormalizeOptions& opts = {}) {
  std::vector<CanonicalSkeleton> out;
  out.reserve(s.size());
  for (const Frame& f : s.frames) out.push_back(normalize_global(f, opts));
  return out;
}

}  // namespace posecoach
