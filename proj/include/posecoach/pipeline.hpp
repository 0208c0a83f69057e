// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end assessment of one candidate recording against a reference:
// normalize, pick key joints, describe, align, score, flag, correct.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posecoach/alignment.hpp"
#include "posecoach/assessment.hpp"
#include "posecoach/config.hpp"
#include "posecoach/correction.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/kinematics.hpp"
#include "posecoach/normalization.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

struct AssessmentResult {
  AssessmentReport report;
  std::vector<VisualAid> aids;
  WarpPath path;
  PaceProfile profile;
  std::vector<JointId> score_joints;
};

// Targeted joints plus the bone ends needed to measure their angles.
inline std::vector<JointId> descriptor_joints(const std::vector<JointId>& targeted) {
  std::vector<JointId> out = targeted;
  for (JointId j : targeted) {
    if (const auto nb = angle_neighbors(j)) {
      out.push_back(nb->first);
      out.push_back(nb->second);
    }
  }
  return sorted_unique(std::move(out));
}

// Root joint for the limb-relative comparison behind an arrow. Angle-bearing
// joints are anchored at their distal neighbour (hand on the bar, foot on the
// floor) so a wrong joint angle shows up as a displaced joint. Other joints
// use the same-side shoulder (upper body) or hip (lower body).
inline JointId arrow_anchor(JointId j, BodyRegion region) {
  if (const auto d = distal_neighbor(j)) return *d;
  using J = JointId;
  const bool left = name(j).rfind("left_", 0) == 0;
  const bool leg = j == J::kLeftAnkle || j == J::kRightAnkle;
  const bool use_hip = region == BodyRegion::kLower || (region == BodyRegion::kBoth && leg);
  if (use_hip) return left ? J::kLeftHip : J::kRightHip;
  return left ? J::kLeftShoulder : J::kRightShoulder;
}

inline AssessmentResult assess(const Sequence& cand, const Sequence& ref,
                               const ExerciseConfig& config) {
  validate(cand);
  validate(ref);
  validate(config);
  const NormalizeOptions opts{config.occlusion_threshold};

  const std::vector<CanonicalSkeleton> cand_skels = normalize_all(cand, opts);
  const std::vector<CanonicalSkeleton> ref_skels = normalize_all(ref, opts);

  std::vector<JointId> targeted = config.targeted_joints;
  if (targeted.empty()) {
    targeted = select_key_joints(ref, config.key_joint_threshold_deg, opts);
    std::sort(targeted.begin(), targeted.end());
  }
  if (targeted.empty()) throw DegenerateError("no key joints: reference shows no joint motion");

  if (targeted.size() < 2) {
    throw DegenerateError("need at least 2 targeted joints to build direction descriptors");
  }

  // Alignment looks only at the targeted joints, so an angle error that moves
  // a distal joint cannot pull the time warp. Scoring adds the bone ends so
  // that same error is still seen.
  AssessmentResult res;
  res.score_joints = descriptor_joints(targeted);
  res.path = dtw_align(descriptor_fields(cand_skels, targeted), descriptor_fields(ref_skels, targeted));
  const auto cand_fields = descriptor_fields(cand_skels, res.score_joints);
  const auto ref_fields = descriptor_fields(ref_skels, res.score_joints);

  res.profile = pace_profile(cand, ref, res.path, config.phase, config.occlusion_threshold);

  AssessmentReport& r = res.report;
  r.name = cand.exercise_id + "(" + std::string(short_tag(cand.label)) + ")";
  r.region = config.region;
  r.targeted_joints = targeted;
  r.joint_score = joint_score(cand_fields, ref_fields, res.path);
  r.pace_score = pace_score(res.profile, config.scores);

  r.pace.duration_ratio = res.profile.duration_ratio;
  r.pace.warp_deviation = res.profile.warp_deviation;
  r.pace.phases = res.profile.phases;
  r.pace.fast_eccentric = detect_fast_eccentric(res.profile, config.phase.min_ratio);

  if (!config.reference_angles.empty()) {
    // The reference recording is the benchmark: its own smoothed span is the
    // target for every configured joint.
    std::vector<JointId> joints;
    for (const auto& [j, range] : config.reference_angles) joints.push_back(j);
    Annotation target;
    target.exercise_id = config.exercise_id;
    target.targeted_joints = joints;
    target.reference_angles = measured_ranges(ref, joints, config.scores.range_smoothing_window,
                                              config.occlusion_threshold);
    r.range_score = range_score(cand, target, config.scores.range_smoothing_window,
                                config.occlusion_threshold);
  }

  r.frame_detail = frame_detail(cand_skels, ref_skels, cand_fields, ref_fields, res.path, targeted,
                                res.profile.phases, config.scores);
  r.flags = flag_mistakes(r.frame_detail, config.scores.flag_threshold);
  r.corrections = textual_feedback(r.flags, config.rules);

  for (const std::string& phase : r.pace.fast_eccentric) {
    for (const PhaseDuration& p : res.profile.phases) {
      if (p.name == phase) {
        r.corrections.push_back(
            {config.pace_message, config.phase.primary_joint, {cand[p.candidate_begin].id}});
      }
    }
  }

  r.rom_violations = rom_check(cand, config.rom_limits, config.occlusion_threshold);
  for (const CanonicalSkeleton& s : cand_skels) r.transforms.push_back({s.frame_id, s.transform});

  // Visual aids: one per flagged candidate frame.
  std::map<std::size_t, std::vector<const MistakeFlag*>> by_frame;
  for (const MistakeFlag& f : r.flags) {
    by_frame[r.frame_detail[f.detail_index].candidate_index].push_back(&f);
  }
  for (const auto& [ci, flags] : by_frame) {
    VisualAid aid;
    aid.frame_id = cand[ci].id;
    std::vector<std::string> captions;
    for (const MistakeFlag* f : flags) {
      for (const Correction& c : r.corrections) {
        if (c.joint == f->joint &&
            std::find(c.key_frames.begin(), c.key_frames.end(), f->frame_id) != c.key_frames.end() &&
            std::find(captions.begin(), captions.end(), c.text) == captions.end()) {
          captions.push_back(c.text);
        }
      }
      const std::size_t ri = r.frame_detail[f->detail_index].reference_index;
      const JointId anchor = arrow_anchor(f->joint, config.region);
      if (cand[ci].occluded(anchor, config.occlusion_threshold) ||
          ref[ri].occluded(anchor, config.occlusion_threshold)) {
        aid.skipped.push_back(f->joint);
        continue;
      }
      const CanonicalSkeleton cl = normalize_local(cand[ci], anchor, {}, opts);
      const CanonicalSkeleton rl = normalize_local(ref[ri], anchor, {}, opts);
      VisualAid part = build_aid(cand[ci], cl.transform, rl, {f->joint}, "",
                                 config.scores.arrow_min_px, config.occlusion_threshold);
      aid.arrows.insert(aid.arrows.end(), part.arrows.begin(), part.arrows.end());
      aid.skipped.insert(aid.skipped.end(), part.skipped.begin(), part.skipped.end());
    }
    for (std::size_t c = 0; c < captions.size(); ++c) {
      aid.caption += (c ? "; " : "") + captions[c];
    }
    if (!aid.arrows.empty()) res.aids.push_back(std::move(aid));
  }

  validate(r);
  return res;
}

}  // namespace posecoach
