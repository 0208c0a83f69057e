// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the test programs: random skeletons, similarity maps in
// pixel space, and independent oracles.

#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "posecoach/posecoach.hpp"

namespace testing_support {

using namespace posecoach;

// Loose human-ish skeleton: shoulders above hips, limbs scattered around.
inline Frame random_frame(std::mt19937_64& rng, std::string id = "f0", double t = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Frame f;
  f.id = std::move(id);
  f.timestamp = t;
  const Vec2 hip{320.0 + 50.0 * u(rng), 300.0 + 50.0 * u(rng)};
  const double torso = 100.0 + 40.0 * u(rng);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    f.points[j] = {hip.x + 1.5 * torso * u(rng), hip.y - torso + 1.5 * torso * u(rng)};
    f.confidence[j] = 1.0;
  }
  f[JointId::kLeftHip] = hip + Vec2{15.0 + 5.0 * u(rng), 5.0 * u(rng)};
  f[JointId::kRightHip] = hip - Vec2{15.0 + 5.0 * u(rng), 5.0 * u(rng)};
  f[JointId::kLeftShoulder] = hip + Vec2{22.0 + 5.0 * u(rng), -torso + 5.0 * u(rng)};
  f[JointId::kRightShoulder] = hip + Vec2{-22.0 - 5.0 * u(rng), -torso + 5.0 * u(rng)};
  return f;
}

// Pixel-space similarity p -> k * R(rot) * p + shift (no reflection).
inline Frame transform_frame(const Frame& f, double k, double rot, Vec2 shift) {
  Frame out = f;
  for (Vec2& p : out.points) p = k * rotate(p, rot) + shift;
  return out;
}

inline Sequence transform_sequence(const Sequence& s, double k, double rot, Vec2 shift) {
  Sequence out = s;
  for (Frame& f : out.frames) f = transform_frame(f, k, rot, shift);
  return out;
}

// Interior angle at b from the law of cosines, degrees.
inline double law_of_cosines_deg(Vec2 a, Vec2 b, Vec2 c) {
  const double ab = distance(a, b);
  const double cb = distance(c, b);
  const double ac = distance(a, c);
  const double cosv = (ab * ab + cb * cb - ac * ac) / (2.0 * ab * cb);
  return rad2deg(std::acos(std::clamp(cosv, -1.0, 1.0)));
}

// Minimum over every monotone unit-step path from (0,0) to (n-1,m-1) of the
// summed step costs, by exhaustive enumeration.
inline double brute_force_dtw(std::size_t n, std::size_t m,
                              const std::function<double(std::size_t, std::size_t)>& cost) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                  double acc) {
    acc = acc + cost(i, j);
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
  };
  // The first step adds cost(0,0) to 0.0, which is exact.
  walk(0, 0, 0.0);
  return best;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("posecoach_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline const char* primary_joint_name(synth::Template t) {
  return t == synth::Template::kSquat ? "left_knee" : "left_elbow";
}

// Synthetic recording with a constant angle offset on the template's primary
// joint (0 = clean).
inline synth::Generated offset_recording(synth::Template t, double offset_deg, std::uint64_t seed,
                                         double noise = 1.0, std::size_t n_frames = 64) {
  synth::MotionSpec s;
  s.exercise = t;
  s.n_frames = n_frames;
  s.noise_std = noise;
  if (offset_deg != 0.0) {
    s.injected_errors.push_back({primary_joint_name(t), synth::ErrorType::kAngleOffset, offset_deg,
                                 synth::MotionPhase::kAll});
  }
  return synth::generate(s, seed);
}

}  // namespace testing_support
