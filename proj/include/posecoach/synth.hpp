// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// Parametric single-repetition motion generator with controlled error
// injection. Joint angles follow a raised-cosine profile, forward kinematics
// maps them to 2D keypoints, and Gaussian pixel noise is added last.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "posecoach/config.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/io.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach::synth {

enum class Template { kSquat, kPress, kPull };

inline std::string_view to_string(Template t) {
  switch (t) {
    case Template::kSquat: return "squat";
    case Template::kPress: return "press";
    case Template::kPull: return "pull";
  }
  return "squat";
}

inline Template parse_template(std::string_view s) {
  if (s == "squat") return Template::kSquat;
  if (s == "press") return Template::kPress;
  if (s == "pull") return Template::kPull;
  throw ValidationError("unknown exercise template '" + std::string(s) + "'");
}

enum class ErrorType { kAngleOffset, kSpeedFactor, kRomTruncation };

enum class MotionPhase { kAll, kEccentric, kConcentric };

struct InjectedError {
  std::string joint;  // full or side-agnostic joint name
  ErrorType type = ErrorType::kAngleOffset;
  double magnitude = 0.0;
  MotionPhase phase = MotionPhase::kAll;
};

struct MotionSpec {
  Template exercise = Template::kSquat;
  std::string exercise_id;  // defaults to the template name
  std::size_t n_frames = 64;
  double fps = 30.0;
  std::map<std::string, double> amplitude_deg;  // overrides, keyed by joint (group) name
  double noise_std = 0.0;                       // pixels
  std::vector<InjectedError> injected_errors;
  double torso_px = 100.0;
  Vec2 center{320.0, 300.0};  // pixel position of the hip midpoint
  double rotation_deg = 0.0;  // camera roll
  std::optional<ClassLabel> label;
};

inline constexpr std::size_t kMinFrames = 8;

// Limb lengths in torso units.
inline constexpr double kUpperArm = 0.55;
inline constexpr double kForearm = 0.5;
inline constexpr double kThigh = 0.8;
inline constexpr double kShank = 0.75;

struct DrivenJoint {
  double base_deg;       // angle at rest (u = 0)
  double amplitude_deg;  // decrease at peak (u = 1)
};

struct TemplateSpec {
  std::map<JointId, DrivenJoint> angles;  // every angle-bearing joint
  JointId primary;
  std::vector<JointId> targeted;
  BodyRegion region;
  // True when the first half of the repetition (angle decreasing) is the
  // eccentric phase.
  bool eccentric_first;
};

inline TemplateSpec template_spec(Template t) {
  using J = JointId;
  const auto both = [](std::map<J, DrivenJoint>& m, J l, J r, DrivenJoint d) {
    m[l] = d;
    m[r] = d;
  };
  TemplateSpec s;
  switch (t) {
    case Template::kSquat:
      both(s.angles, J::kLeftKnee, J::kRightKnee, {175.0, 80.0});
      both(s.angles, J::kLeftHip, J::kRightHip, {170.0, 80.0});
      both(s.angles, J::kLeftShoulder, J::kRightShoulder, {80.0, 0.0});
      both(s.angles, J::kLeftElbow, J::kRightElbow, {170.0, 0.0});
      s.primary = J::kLeftKnee;
      s.targeted = {J::kLeftHip, J::kRightHip, J::kLeftKnee, J::kRightKnee};
      s.region = BodyRegion::kLower;
      s.eccentric_first = true;
      break;
    case Template::kPress:
      both(s.angles, J::kLeftElbow, J::kRightElbow, {170.0, 80.0});
      both(s.angles, J::kLeftShoulder, J::kRightShoulder, {95.0, 15.0});
      both(s.angles, J::kLeftHip, J::kRightHip, {175.0, 0.0});
      both(s.angles, J::kLeftKnee, J::kRightKnee, {170.0, 0.0});
      s.primary = J::kLeftElbow;
      s.targeted = {J::kLeftShoulder, J::kRightShoulder, J::kLeftElbow, J::kRightElbow};
      s.region = BodyRegion::kUpper;
      s.eccentric_first = true;
      break;
    case Template::kPull:
      both(s.angles, J::kLeftElbow, J::kRightElbow, {170.0, 110.0});
      both(s.angles, J::kLeftShoulder, J::kRightShoulder, {170.0, 100.0});
      both(s.angles, J::kLeftHip, J::kRightHip, {175.0, 0.0});
      both(s.angles, J::kLeftKnee, J::kRightKnee, {175.0, 0.0});
      s.primary = J::kLeftElbow;
      s.targeted = {J::kLeftShoulder, J::kRightShoulder, J::kLeftElbow, J::kRightElbow};
      s.region = BodyRegion::kUpper;
      s.eccentric_first = false;
      break;
  }
  return s;
}

// Exercise config matching a template, with reference ranges on the primary
// joint pair.
inline ExerciseConfig template_config(Template t) {
  const TemplateSpec s = template_spec(t);
  ExerciseConfig c;
  c.exercise_id = std::string(to_string(t));
  c.region = s.region;
  c.targeted_joints = sorted_unique(s.targeted);
  for (JointId j : parse_joint_group(side_agnostic_name(s.primary))) {
    const DrivenJoint d = s.angles.at(j);
    c.reference_angles[j] = {d.base_deg - d.amplitude_deg, d.base_deg};
  }
  c.phase.primary_joint = s.primary;
  c.phase.eccentric_decreasing = s.eccentric_first;
  return c;
}

inline void validate(const MotionSpec& spec) {
  if (spec.n_frames < kMinFrames) {
    throw ValidationError("motion spec: n_frames must be >= " + std::to_string(kMinFrames) +
                          ", got " + std::to_string(spec.n_frames));
  }
  if (!(spec.fps > 0.0 && std::isfinite(spec.fps))) throw ValidationError("motion spec: fps must be > 0");
  if (!(spec.noise_std >= 0.0 && std::isfinite(spec.noise_std))) {
    throw ValidationError("motion spec: noise_std must be >= 0");
  }
  if (!(spec.torso_px > 0.0)) throw ValidationError("motion spec: torso_px must be > 0");
  for (const auto& [joint, amp] : spec.amplitude_deg) {
    parse_joint_group(joint);
    if (!std::isfinite(amp)) throw ValidationError("motion spec: amplitude must be finite");
  }
  for (const InjectedError& e : spec.injected_errors) {
    parse_joint_group(e.joint);
    if (!std::isfinite(e.magnitude)) throw ValidationError("motion spec: magnitude must be finite");
    if (e.type == ErrorType::kSpeedFactor && !(e.magnitude > 0.0)) {
      throw ValidationError("motion spec: speed_factor must be > 0");
    }
    if (e.type == ErrorType::kRomTruncation && !(e.magnitude >= 0.0 && e.magnitude <= 1.0)) {
      throw ValidationError("motion spec: rom_truncation_fraction must be in [0,1]");
    }
  }
}

namespace detail {

// Joint positions in torso units, y up, hip midpoint at the origin. The
// person faces the camera, so their left side is at +x.
inline std::array<Vec2, kNumJoints> forward_kinematics(const std::map<JointId, double>& deg) {
  using J = JointId;
  std::array<Vec2, kNumJoints> p{};
  const auto set = [&](J j, Vec2 v) { p[index(j)] = v; };
  const auto unit = [](Vec2 v) { return v / norm(v); };

  set(J::kLeftShoulder, {0.22, 1.0});
  set(J::kRightShoulder, {-0.22, 1.0});
  set(J::kLeftHip, {0.15, 0.0});
  set(J::kRightHip, {-0.15, 0.0});
  set(J::kNose, {0.0, 1.3});
  set(J::kLeftEye, {0.05, 1.35});
  set(J::kRightEye, {-0.05, 1.35});
  set(J::kLeftEar, {0.1, 1.32});
  set(J::kRightEar, {-0.1, 1.32});

  struct Limb {
    J root, base, mid, end;
    double proximal, distal;
    double root_sense, mid_sense;  // +1 counter-clockwise
  };
  const Limb limbs[] = {
      {J::kLeftShoulder, J::kLeftHip, J::kLeftElbow, J::kLeftWrist, kUpperArm, kForearm, 1, -1},
      {J::kRightShoulder, J::kRightHip, J::kRightElbow, J::kRightWrist, kUpperArm, kForearm, -1, 1},
      {J::kLeftHip, J::kLeftShoulder, J::kLeftKnee, J::kLeftAnkle, kThigh, kShank, -1, 1},
      {J::kRightHip, J::kRightShoulder, J::kRightKnee, J::kRightAnkle, kThigh, kShank, 1, -1},
  };
  for (const Limb& l : limbs) {
    const Vec2 root = p[index(l.root)];
    const Vec2 toward_base = unit(p[index(l.base)] - root);
    const Vec2 mid = root + l.proximal * rotate(toward_base, l.root_sense * deg2rad(deg.at(l.root)));
    const Vec2 back = unit(root - mid);
    const Vec2 end = mid + l.distal * rotate(back, l.mid_sense * deg2rad(deg.at(l.mid)));
    set(l.mid, mid);
    set(l.end, end);
  }
  return p;
}

inline bool in_phase(MotionPhase want, bool first_half, bool eccentric_first) {
  if (want == MotionPhase::kAll) return true;
  const bool eccentric = first_half == eccentric_first;
  return (want == MotionPhase::kEccentric) == eccentric;
}

}  // namespace detail

struct Generated {
  Sequence sequence;
  Annotation annotation;
};

// Deterministic in (spec, seed).
inline Generated generate(const MotionSpec& spec, std::uint64_t seed) {
  validate(spec);
  const TemplateSpec tpl = template_spec(spec.exercise);

  std::map<JointId, DrivenJoint> drive = tpl.angles;
  for (const auto& [joint, amp] : spec.amplitude_deg) {
    for (JointId j : parse_joint_group(joint)) {
      if (!is_angle_bearing(j)) throw ValidationError("motion spec: amplitude on end joint " + joint);
      drive[j].amplitude_deg = amp;
    }
  }
  const std::map<JointId, DrivenJoint> reference_drive = drive;

  // Half-repetition durations, scaled by speed errors.
  const double nominal = static_cast<double>(spec.n_frames - 1) / spec.fps;
  double first = nominal / 2.0;
  double second = nominal / 2.0;
  for (const InjectedError& e : spec.injected_errors) {
    if (e.type == ErrorType::kSpeedFactor) {
      if (detail::in_phase(e.phase, true, tpl.eccentric_first)) first /= e.magnitude;
      if (detail::in_phase(e.phase, false, tpl.eccentric_first)) second /= e.magnitude;
    } else if (e.type == ErrorType::kRomTruncation) {
      for (JointId j : parse_joint_group(e.joint)) {
        if (drive.count(j)) drive[j].amplitude_deg *= 1.0 - e.magnitude;
      }
    }
  }
  const double total = first + second;

  Generated out;
  Sequence& seq = out.sequence;
  seq.exercise_id = spec.exercise_id.empty() ? std::string(to_string(spec.exercise)) : spec.exercise_id;
  seq.label = spec.label.value_or(spec.injected_errors.empty() ? ClassLabel::kCorrect
                                                               : ClassLabel::kWrong);
  seq.fps = spec.fps;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double roll = deg2rad(spec.rotation_deg);

  Annotation& ann = out.annotation;
  ann.exercise_id = seq.exercise_id;
  ann.targeted_joints = sorted_unique(tpl.targeted);
  for (JointId j : parse_joint_group(side_agnostic_name(tpl.primary))) {
    const DrivenJoint d = reference_drive.at(j);
    ann.reference_angles[j] = {d.base_deg - d.amplitude_deg, d.base_deg};
  }
  ann.rom_limits = default_rom_table();

  for (std::size_t i = 0; i < spec.n_frames; ++i) {
    const double t = total * (static_cast<double>(i) / static_cast<double>(spec.n_frames - 1));
    const bool first_half = t <= first;
    const double u = first_half ? 0.5 * (1.0 - std::cos(kPi * t / first))
                                : 0.5 * (1.0 + std::cos(kPi * (t - first) / second));

    char id[32];
    std::snprintf(id, sizeof id, "f%04zu", i);

    std::map<JointId, double> deg;
    for (const auto& [j, d] : drive) deg[j] = d.base_deg - d.amplitude_deg * u;
    for (const InjectedError& e : spec.injected_errors) {
      if (e.type != ErrorType::kAngleOffset) continue;
      if (!detail::in_phase(e.phase, first_half, tpl.eccentric_first)) continue;
      for (JointId j : parse_joint_group(e.joint)) {
        if (!is_angle_bearing(j)) throw ValidationError("motion spec: angle offset on end joint " + e.joint);
        deg[j] -= e.magnitude;
        ann.per_frame_mistakes.push_back(
            {id, j, "angle offset " + std::to_string(e.magnitude) + " deg"});
      }
    }
    for (const auto& [j, a] : deg) {
      if (!(a >= 0.0 && a <= 180.0)) {
        throw ValidationError("motion spec: " + std::string(name(j)) + " angle leaves [0,180]");
      }
    }

    const auto body = detail::forward_kinematics(deg);
    Frame f;
    f.id = id;
    f.timestamp = t;
    for (std::size_t k = 0; k < kNumJoints; ++k) {
      const Vec2 r = rotate(body[k], roll);
      f.points[k] = {spec.center.x + spec.torso_px * r.x, spec.center.y - spec.torso_px * r.y};
      f.confidence[k] = 1.0;
    }
    if (spec.noise_std > 0.0) {
      for (Vec2& p : f.points) {
        p.x += spec.noise_std * noise(rng);
        p.y += spec.noise_std * noise(rng);
      }
    }
    seq.frames.push_back(std::move(f));
  }
  posecoach::validate(seq);
  return out;
}

// --- spec file ---------------------------------------------------------------

inline ErrorType parse_error_type(std::string_view s) {
  if (s == "angle_offset_deg") return ErrorType::kAngleOffset;
  if (s == "speed_factor") return ErrorType::kSpeedFactor;
  if (s == "rom_truncation_fraction") return ErrorType::kRomTruncation;
  throw ValidationError("unknown injected error type '" + std::string(s) + "'");
}

inline MotionPhase parse_motion_phase(std::string_view s) {
  if (s == "all" || s == "full") return MotionPhase::kAll;
  if (s == "eccentric") return MotionPhase::kEccentric;
  if (s == "concentric") return MotionPhase::kConcentric;
  throw ValidationError("unknown motion phase '" + std::string(s) + "'");
}

inline MotionSpec motion_spec_from_json(const Json& j, const std::string& origin = "motion spec") {
  if (!j.is_object()) throw ValidationError(origin + ": expected a JSON object");
  using posecoach::detail::get_field;
  using posecoach::detail::get_or;
  MotionSpec s;
  s.exercise = parse_template(get_field<std::string>(j, "template", origin));
  s.exercise_id = get_or<std::string>(j, "exercise_id", "", origin);
  const auto frames = get_or<std::int64_t>(j, "n_frames", 64, origin);
  if (frames < 0) throw ValidationError(origin + ": n_frames must be >= 0");
  s.n_frames = static_cast<std::size_t>(frames);
  s.fps = get_or<double>(j, "fps", s.fps, origin);
  s.noise_std = get_or<double>(j, "noise_std", s.noise_std, origin);
  s.torso_px = get_or<double>(j, "torso_px", s.torso_px, origin);
  s.rotation_deg = get_or<double>(j, "rotation_deg", s.rotation_deg, origin);
  if (j.contains("center")) {
    const auto c = get_field<std::vector<double>>(j, "center", origin);
    if (c.size() != 2) throw ValidationError(origin + ": center must be [x, y]");
    s.center = {c[0], c[1]};
  }
  if (j.contains("class")) s.label = parse_class_label(get_field<std::string>(j, "class", origin));
  if (j.contains("amplitude_deg")) {
    s.amplitude_deg = get_field<std::map<std::string, double>>(j, "amplitude_deg", origin);
  }
  if (j.contains("injected_errors")) {
    const Json& arr = j.at("injected_errors");
    if (!arr.is_array()) throw ValidationError(origin + ": injected_errors must be an array");
    for (const Json& e : arr) {
      InjectedError err;
      err.joint = get_field<std::string>(e, "joint", origin);
      err.type = parse_error_type(get_field<std::string>(e, "type", origin));
      err.magnitude = get_field<double>(e, "magnitude", origin);
      err.phase = parse_motion_phase(get_or<std::string>(e, "phase", "all", origin));
      s.injected_errors.push_back(std::move(err));
    }
  }
  validate(s);
  return s;
}

inline MotionSpec load_motion_spec(const std::filesystem::path& path) {
  return motion_spec_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

}  // namespace posecoach::synth
