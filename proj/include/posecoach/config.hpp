// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "posecoach/alignment.hpp"
#include "posecoach/assessment.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

// Everything the pipeline knows about one exercise.
struct ExerciseConfig {
  std::string exercise_id;
  BodyRegion region = BodyRegion::kBoth;
  // Empty means "select from the reference by first/last angle change".
  std::vector<JointId> targeted_joints;
  // Joints scored for range of motion. Empty makes range not applicable.
  std::map<JointId, AngleRange> reference_angles;
  std::map<JointId, AngleRange> rom_limits = default_rom_table();
  double key_joint_threshold_deg = 15.0;
  PhaseConfig phase;
  std::vector<CorrectionRule> rules;
  ScoreConstants scores;
  double occlusion_threshold = kDefaultOcclusionThreshold;
  std::string pace_message = "Slow down the eccentric phase";
};

inline void validate(const ExerciseConfig& c) {
  if (c.exercise_id.empty()) throw ValidationError("config: exercise_id is required");
  if (!(c.key_joint_threshold_deg >= 0.0)) {
    throw ValidationError("config: key_joint_threshold_deg must be >= 0");
  }
  if (!(c.phase.min_ratio > 0.0)) throw ValidationError("config: phase.min_ratio must be > 0");
  if (c.phase.smoothing_window == 0) {
    throw ValidationError("config: phase.smoothing_window must be >= 1");
  }
  if (!(c.phase.min_excursion_deg > 0.0)) {
    throw ValidationError("config: phase.min_excursion_deg must be > 0");
  }
  if (!is_angle_bearing(c.phase.primary_joint)) {
    throw ValidationError("config: phase.primary_joint must be an angle-bearing joint");
  }
  const ScoreConstants& k = c.scores;
  if (!(k.flag_threshold > 0.0 && k.flag_threshold < 1.0)) {
    throw ValidationError("config: scores.flag_threshold must be in (0,1)");
  }
  if (!(k.deviation_scale_deg > 0.0)) {
    throw ValidationError("config: scores.deviation_scale_deg must be > 0");
  }
  if (!(k.pace_ratio_weight >= 0.0 && k.pace_warp_weight >= 0.0) ||
      std::abs(k.pace_ratio_weight + k.pace_warp_weight - 1.0) > 1e-12) {
    throw ValidationError("config: pace weights must be non-negative and sum to 1");
  }
  if (!(k.arrow_min_px >= 0.0)) throw ValidationError("config: scores.arrow_min_px must be >= 0");
  if (!(c.occlusion_threshold >= 0.0 && c.occlusion_threshold <= 1.0)) {
    throw ValidationError("config: occlusion_threshold must be in [0,1]");
  }
  for (const auto& [j, r] : c.reference_angles) {
    if (!(r.min_deg <= r.max_deg)) {
      throw ValidationError("config: reference_angles for " + std::string(name(j)) +
                            " has min > max");
    }
  }
  for (const CorrectionRule& r : c.rules) {
    parse_joint_group(r.joint);
    if (r.message.empty()) throw ValidationError("config: correction rule without message");
  }
}

}  // namespace posecoach
