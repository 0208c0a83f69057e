// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posecoach/alignment.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/kinematics.hpp"
#include "posecoach/normalization.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

enum class BodyRegion { kUpper, kLower, kBoth };

inline std::string_view to_string(BodyRegion r) {
  switch (r) {
    case BodyRegion::kUpper: return "Upper";
    case BodyRegion::kLower: return "Lower";
    case BodyRegion::kBoth: return "Both";
  }
  return "Both";
}

inline BodyRegion parse_body_region(std::string_view s) {
  if (s == "Upper" || s == "upper") return BodyRegion::kUpper;
  if (s == "Lower" || s == "lower") return BodyRegion::kLower;
  if (s == "Both" || s == "both") return BodyRegion::kBoth;
  throw ValidationError("unknown body region '" + std::string(s) + "'");
}

// Tunables for the rule-based scorer. Every default is pinned here so tests
// and configs agree.
struct ScoreConstants {
  double flag_threshold = 0.25;
  // Angular difference that maps to deviation 1.0.
  double deviation_scale_deg = 60.0;
  double pace_ratio_weight = 0.5;
  double pace_warp_weight = 0.5;
  double arrow_min_px = 2.0;
  std::size_t range_smoothing_window = 5;

  friend bool operator==(const ScoreConstants&, const ScoreConstants&) = default;
};

struct JointDeviation {
  JointId joint;
  double deviation = 0.0;  // [0, 1]
  std::optional<double> candidate_angle;
  std::optional<double> reference_angle;
  friend bool operator==(const JointDeviation&, const JointDeviation&) = default;
};

// One row per warp-path pair.
struct FrameDetail {
  std::size_t candidate_index = 0;
  std::size_t reference_index = 0;
  std::string candidate_frame;
  std::string reference_frame;
  std::string phase;
  std::vector<JointDeviation> joints;
  friend bool operator==(const FrameDetail&, const FrameDetail&) = default;
};

struct MistakeFlag {
  std::size_t detail_index = 0;
  std::string frame_id;
  JointId joint;
  double deviation = 0.0;
  std::optional<double> candidate_angle;
  std::string phase;
  friend bool operator==(const MistakeFlag&, const MistakeFlag&) = default;
};

struct Correction {
  std::string text;
  JointId joint;
  std::vector<std::string> key_frames;
  friend bool operator==(const Correction&, const Correction&) = default;
};

enum class RulePredicate { kAngleAbove, kAngleBelow, kDeviationAbove };

struct CorrectionRule {
  std::string joint;  // full or side-agnostic joint name
  RulePredicate predicate = RulePredicate::kDeviationAbove;
  double value = 0.0;
  std::optional<std::string> phase;
  std::string message;
  friend bool operator==(const CorrectionRule&, const CorrectionRule&) = default;
};

// --- scores ----------------------------------------------------------------

inline double joint_score(const std::vector<JointVectorField>& cand,
                          const std::vector<JointVectorField>& ref, const WarpPath& path) {
  if (path.pairs.empty()) throw ValidationError("joint_score: empty warp path");
  double sum = 0.0;
  for (const auto& [i, j] : path.pairs) sum += 0.5 * (frame_cosine(cand.at(i), ref.at(j)) + 1.0);
  return 100.0 * sum / static_cast<double>(path.pairs.size());
}

inline std::vector<JointVectorField> descriptor_fields(const std::vector<CanonicalSkeleton>& skels,
                                                       const std::vector<JointId>& joints) {
  std::vector<JointVectorField> out;
  out.reserve(skels.size());
  for (const CanonicalSkeleton& s : skels) out.push_back(joint_vectors(s, joints));
  return out;
}

inline double joint_score(const Sequence& cand, const Sequence& ref,
                          const std::vector<JointId>& targeted, const WarpPath& path,
                          const NormalizeOptions& opts = {}) {
  if (targeted.size() < 2) throw DegenerateError("joint_score: need at least 2 targeted joints");
  return joint_score(descriptor_fields(normalize_all(cand, opts), targeted),
                     descriptor_fields(normalize_all(ref, opts), targeted), path);
}

inline double pace_score(const PaceProfile& p, const ScoreConstants& k = {}) {
  const double tempo = std::max(0.0, 1.0 - std::abs(std::log2(p.duration_ratio)));
  const double warp = 1.0 - std::clamp(p.warp_deviation, 0.0, 1.0);
  return std::clamp(100.0 * (k.pace_ratio_weight * tempo + k.pace_warp_weight * warp), 0.0,
                    100.0);
}

// Observed angle interval of each joint over the sequence, after the same
// smoothing used for scoring.
inline std::map<JointId, AngleRange> measured_ranges(const Sequence& seq,
                                                     const std::vector<JointId>& joints,
                                                     std::size_t smoothing_window = 5,
                                                     double occlusion_threshold =
                                                         kDefaultOcclusionThreshold) {
  std::map<JointId, AngleRange> out;
  for (JointId j : joints) {
    if (!is_angle_bearing(j)) continue;
    const auto s = moving_average(angle_series(seq, j, occlusion_threshold), smoothing_window);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    out[j] = {*lo, *hi};
  }
  return out;
}

// Mean achieved/reference angle span over the annotated joints, in [0, 100].
// nullopt when the annotation carries no reference ranges.
inline std::optional<double> range_score(const Sequence& cand, const Annotation& annotation,
                                         std::size_t smoothing_window = 5,
                                         double occlusion_threshold =
                                             kDefaultOcclusionThreshold) {
  std::vector<JointId> joints;
  for (const auto& [j, r] : annotation.reference_angles) {
    const bool targeted =
        annotation.targeted_joints.empty() ||
        std::find(annotation.targeted_joints.begin(), annotation.targeted_joints.end(), j) !=
            annotation.targeted_joints.end();
    if (targeted && is_angle_bearing(j)) joints.push_back(j);
  }
  if (joints.empty()) return std::nullopt;

  const auto achieved = measured_ranges(cand, joints, smoothing_window, occlusion_threshold);
  double sum = 0.0;
  for (JointId j : joints) {
    const double want = annotation.reference_angles.at(j).span();
    const double got = achieved.at(j).span();
    sum += want > 0.0 ? std::clamp(got / want, 0.0, 1.0) : 1.0;
  }
  return 100.0 * sum / static_cast<double>(joints.size());
}

// --- per-frame detail --------------------------------------------------------

// Deviation of one targeted joint between aligned frames. Angle-bearing joints
// compare interior angles; end joints compare their outgoing direction
// vectors, (1 - cos) / 2 averaged.
inline JointDeviation joint_deviation(JointId j, const CanonicalSkeleton& cand,
                                      const CanonicalSkeleton& ref, const JointVectorField& cf,
                                      const JointVectorField& rf, const ScoreConstants& k) {
  JointDeviation d{j, 0.0, std::nullopt, std::nullopt};
  if (is_angle_bearing(j)) {
    d.candidate_angle = try_joint_angle(cand, j);
    d.reference_angle = try_joint_angle(ref, j);
    if (d.candidate_angle && d.reference_angle) {
      d.deviation =
          std::min(1.0, std::abs(*d.candidate_angle - *d.reference_angle) / k.deviation_scale_deg);
    }
    return d;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const JointVector& a : cf.vectors) {
    if (a.from != j) continue;
    for (const JointVector& b : rf.vectors) {
      if (b.from == a.from && b.to == a.to) {
        sum += 0.5 * (1.0 - dot(a.dir, b.dir));
        ++n;
      }
    }
  }
  d.deviation = n > 0 ? std::clamp(sum / static_cast<double>(n), 0.0, 1.0) : 0.0;
  return d;
}

inline std::string phase_of(const std::vector<PhaseDuration>& phases, std::size_t cand_index) {
  for (const PhaseDuration& p : phases) {
    if (cand_index >= p.candidate_begin && cand_index < p.candidate_end) return p.name;
  }
  return phases.empty() ? std::string("full") : phases.back().name;
}

inline std::vector<FrameDetail> frame_detail(const std::vector<CanonicalSkeleton>& cand,
                                             const std::vector<CanonicalSkeleton>& ref,
                                             const std::vector<JointVectorField>& cand_fields,
                                             const std::vector<JointVectorField>& ref_fields,
                                             const WarpPath& path,
                                             const std::vector<JointId>& targeted,
                                             const std::vector<PhaseDuration>& phases,
                                             const ScoreConstants& k = {}) {
  std::vector<FrameDetail> out;
  out.reserve(path.pairs.size());
  for (const auto& [i, j] : path.pairs) {
    FrameDetail row;
    row.candidate_index = i;
    row.reference_index = j;
    row.candidate_frame = cand[i].frame_id;
    row.reference_frame = ref[j].frame_id;
    row.phase = phase_of(phases, i);
    for (JointId t : targeted) {
      row.joints.push_back(joint_deviation(t, cand[i], ref[j], cand_fields[i], ref_fields[j], k));
    }
    out.push_back(std::move(row));
  }
  return out;
}

// Local maxima of each joint's deviation curve above threshold, keeping the
// largest one per joint per phase (earliest on ties).
inline std::vector<MistakeFlag> flag_mistakes(const std::vector<FrameDetail>& detail,
                                              double threshold = 0.25) {
  std::vector<MistakeFlag> flags;
  if (detail.empty()) return flags;
  const std::size_t n_joints = detail.front().joints.size();
  for (std::size_t jj = 0; jj < n_joints; ++jj) {
    const auto dev = [&](std::size_t k) { return detail[k].joints[jj].deviation; };
    std::map<std::string, std::size_t> best;  // phase -> detail index
    for (std::size_t k = 0; k < detail.size(); ++k) {
      const double v = dev(k);
      if (!(v > threshold)) continue;
      if (k > 0 && dev(k - 1) > v) continue;
      if (k + 1 < detail.size() && dev(k + 1) > v) continue;
      auto [it, inserted] = best.try_emplace(detail[k].phase, k);
      if (!inserted && v > dev(it->second)) it->second = k;
    }
    for (const auto& [phase, k] : best) {
      const JointDeviation& d = detail[k].joints[jj];
      flags.push_back({k, detail[k].candidate_frame, d.joint, d.deviation, d.candidate_angle, phase});
    }
  }
  std::sort(flags.begin(), flags.end(), [](const MistakeFlag& a, const MistakeFlag& b) {
    return std::pair{a.detail_index, a.joint} < std::pair{b.detail_index, b.joint};
  });
  return flags;
}

inline bool rule_matches(const CorrectionRule& rule, const MistakeFlag& flag) {
  const auto joints = parse_joint_group(rule.joint);
  if (std::find(joints.begin(), joints.end(), flag.joint) == joints.end()) return false;
  if (rule.phase && *rule.phase != "any" && flag.phase.rfind(*rule.phase, 0) != 0) return false;
  switch (rule.predicate) {
    case RulePredicate::kAngleAbove:
      return flag.candidate_angle && *flag.candidate_angle > rule.value;
    case RulePredicate::kAngleBelow:
      return flag.candidate_angle && *flag.candidate_angle < rule.value;
    case RulePredicate::kDeviationAbove:
      return flag.deviation > rule.value;
  }
  return false;
}

inline std::string generic_message(JointId j) {
  return "adjust " + std::string(name(j)) + " toward reference";
}

// One correction per (message, joint), citing every flagged frame that
// produced it, in order of first appearance.
inline std::vector<Correction> textual_feedback(const std::vector<MistakeFlag>& flags,
                                                const std::vector<CorrectionRule>& rules) {
  std::vector<Correction> out;
  for (const MistakeFlag& f : flags) {
    std::string text = generic_message(f.joint);
    for (const CorrectionRule& r : rules) {
      if (rule_matches(r, f)) {
        text = r.message;
        break;
      }
    }
    auto it = std::find_if(out.begin(), out.end(), [&](const Correction& c) {
      return c.text == text && c.joint == f.joint;
    });
    if (it == out.end()) {
      out.push_back({text, f.joint, {f.frame_id}});
    } else if (std::find(it->key_frames.begin(), it->key_frames.end(), f.frame_id) ==
               it->key_frames.end()) {
      it->key_frames.push_back(f.frame_id);
    }
  }
  return out;
}

// --- report ------------------------------------------------------------------

struct ModelScores {
  double joint = 0.0;  // 0-100
  double pace = 0.0;
  double range = 0.0;
  std::vector<std::string> mistake_frames;
  friend bool operator==(const ModelScores&, const ModelScores&) = default;
};

struct PaceSummary {
  double duration_ratio = 1.0;
  double warp_deviation = 0.0;
  std::vector<PhaseDuration> phases;
  std::vector<std::string> fast_eccentric;

  friend bool operator==(const PaceSummary& a, const PaceSummary& b) {
    if (a.duration_ratio != b.duration_ratio || a.warp_deviation != b.warp_deviation ||
        a.fast_eccentric != b.fast_eccentric || a.phases.size() != b.phases.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.phases.size(); ++i) {
      const auto& x = a.phases[i];
      const auto& y = b.phases[i];
      if (x.name != y.name || x.candidate_seconds != y.candidate_seconds ||
          x.reference_seconds != y.reference_seconds || x.candidate_begin != y.candidate_begin ||
          x.candidate_end != y.candidate_end) {
        return false;
      }
    }
    return true;
  }
};

struct FrameTransform {
  std::string frame_id;
  NormalizationTransform transform;
  friend bool operator==(const FrameTransform&, const FrameTransform&) = default;
};

// One row of the summary table plus the per-frame evidence behind it.
struct AssessmentReport {
  std::string name;
  BodyRegion region = BodyRegion::kBoth;
  double joint_score = 0.0;
  double pace_score = 0.0;
  std::optional<double> range_score;  // nullopt = not applicable
  std::vector<Correction> corrections;

  std::vector<JointId> targeted_joints;
  std::vector<FrameDetail> frame_detail;
  std::vector<MistakeFlag> flags;
  PaceSummary pace;
  std::vector<RomViolation> rom_violations;
  std::vector<FrameTransform> transforms;
  std::optional<ModelScores> model;

  friend bool operator==(const AssessmentReport&, const AssessmentReport&) = default;
};

inline void validate(const AssessmentReport& r) {
  const auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
  if (!in_range(r.joint_score) || !in_range(r.pace_score) ||
      (r.range_score && !in_range(*r.range_score))) {
    throw ValidationError("report '" + r.name + "': score outside [0,100]");
  }
  for (const Correction& c : r.corrections) {
    if (c.key_frames.empty()) {
      throw ValidationError("report '" + r.name + "': correction '" + c.text +
                            "' cites no key frame");
    }
  }
}

}  // namespace posecoach
