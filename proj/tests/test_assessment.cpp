// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace {

using namespace posecoach;
using testing_support::random_frame;

WarpPath diagonal(std::size_t n) {
  WarpPath p;
  for (std::size_t i = 0; i < n; ++i) p.pairs.emplace_back(i, i);
  return p;
}

Sequence random_sequence(std::mt19937_64& rng, std::size_t n) {
  Sequence s;
  s.exercise_id = "random";
  for (std::size_t i = 0; i < n; ++i) {
    s.frames.push_back(random_frame(rng, "f" + std::to_string(i), 0.1 * static_cast<double>(i)));
  }
  return s;
}

// Mean over path pairs of (1 + mean pairwise direction cosine) / 2, straight
// from the normalized coordinates.
double oracle_joint_score(const Sequence& a, const Sequence& b, const std::vector<JointId>& js,
                          const WarpPath& path) {
  double total = 0.0;
  for (const auto& [i, j] : path.pairs) {
    const CanonicalSkeleton ca = normalize_global(a[i]);
    const CanonicalSkeleton cb = normalize_global(b[j]);
    double sum = 0.0;
    int n = 0;
    for (JointId x : js) {
      for (JointId y : js) {
        if (x == y) continue;
        const Vec2 u = ca[y] - ca[x];
        const Vec2 v = cb[y] - cb[x];
        sum += dot(u, v) / (norm(u) * norm(v));
        ++n;
      }
    }
    total += 0.5 * (sum / n + 1.0);
  }
  return 100.0 * total / static_cast<double>(path.pairs.size());
}

const std::vector<JointId> kArm{JointId::kLeftShoulder, JointId::kLeftElbow, JointId::kLeftWrist,
                                JointId::kRightShoulder};

TEST(JointScore, IdenticalIsHundred) {
  std::mt19937_64 rng(51);
  const Sequence s = random_sequence(rng, 12);
  EXPECT_NEAR(joint_score(s, s, kArm, diagonal(12)), 100.0, 1e-9);
}

TEST(JointScore, MatchesDirectComputation) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const Sequence a = random_sequence(rng, 8);
    Sequence b = a;
    for (Frame& f : b.frames) {
      // Mirror the wrist across the elbow.
      f[JointId::kLeftWrist] = f[JointId::kLeftElbow] * 2.0 - f[JointId::kLeftWrist];
    }
    const WarpPath p = diagonal(8);
    EXPECT_NEAR(joint_score(a, b, kArm, p), oracle_joint_score(a, b, kArm, p), 1e-9);
    EXPECT_LT(joint_score(a, b, kArm, p), 100.0);
  }
}

TEST(JointScore, FewerThanTwoJointsIsDegenerate) {
  std::mt19937_64 rng(53);
  const Sequence s = random_sequence(rng, 3);
  EXPECT_THROW(joint_score(s, s, {JointId::kLeftElbow}, diagonal(3)), DegenerateError);
}

TEST(PaceScore, Formula) {
  PaceProfile p;
  EXPECT_DOUBLE_EQ(pace_score(p), 100.0);
  p.duration_ratio = 2.0;
  EXPECT_DOUBLE_EQ(pace_score(p), 50.0);
  p.duration_ratio = 0.5;
  EXPECT_DOUBLE_EQ(pace_score(p), 50.0);
  p.duration_ratio = 1.0;
  p.warp_deviation = 1.0;
  EXPECT_DOUBLE_EQ(pace_score(p), 50.0);
  p.duration_ratio = 4.0;
  EXPECT_DOUBLE_EQ(pace_score(p), 0.0);
  p.duration_ratio = std::sqrt(2.0);
  p.warp_deviation = 0.2;
  EXPECT_NEAR(pace_score(p), 100.0 * (0.5 * 0.5 + 0.5 * 0.8), 1e-12);
}

TEST(RangeScore, FullHalfAndNotApplicable) {
  const synth::Generated full = testing_support::offset_recording(synth::Template::kSquat, 0.0, 1, 0.0);
  Annotation ann;
  ann.reference_angles = measured_ranges(full.sequence, {JointId::kLeftKnee, JointId::kRightKnee});
  EXPECT_NEAR(*range_score(full.sequence, ann), 100.0, 1e-9);

  synth::MotionSpec spec;
  spec.injected_errors.push_back({"knee", synth::ErrorType::kRomTruncation, 0.5, synth::MotionPhase::kAll});
  const Sequence shallow = synth::generate(spec, 1).sequence;
  EXPECT_NEAR(*range_score(shallow, ann), 50.0, 2.0);

  EXPECT_FALSE(range_score(shallow, Annotation{}).has_value());
}

TEST(RangeScore, NeverExceedsHundred) {
  const Sequence s = testing_support::offset_recording(synth::Template::kPress, 0.0, 2).sequence;
  Annotation ann;
  ann.reference_angles[JointId::kLeftElbow] = {150.0, 160.0};
  EXPECT_DOUBLE_EQ(*range_score(s, ann), 100.0);
}

std::vector<FrameDetail> detail_from(const std::vector<std::vector<double>>& curves,
                                     const std::vector<std::string>& phases) {
  std::vector<FrameDetail> d(curves.front().size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k].candidate_index = k;
    d[k].candidate_frame = "f" + std::to_string(k);
    d[k].phase = phases[k];
    for (std::size_t j = 0; j < curves.size(); ++j) {
      d[k].joints.push_back({joint_at(5 + j), curves[j][k], 100.0 + k, 100.0});
    }
  }
  return d;
}

TEST(FlagMistakes, SingleSpike) {
  std::vector<double> c(20, 0.05);
  c[7] = 0.6;
  c[6] = 0.3;
  c[8] = 0.3;
  const auto flags = flag_mistakes(detail_from({c}, std::vector<std::string>(20, "full")), 0.25);
  ASSERT_EQ(flags.size(), 1u);
  EXPECT_EQ(flags[0].detail_index, 7u);
  EXPECT_EQ(flags[0].frame_id, "f7");
  EXPECT_DOUBLE_EQ(flags[0].deviation, 0.6);
}

TEST(FlagMistakes, NothingBelowThreshold) {
  const std::vector<double> c(10, 0.25);
  EXPECT_TRUE(flag_mistakes(detail_from({c}, std::vector<std::string>(10, "full")), 0.25).empty());
}

// Property: per joint and phase, the flag sits on the largest local maximum
// above threshold (earliest on ties).
TEST(FlagMistakes, MatchesLocalMaximaOracle) {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + trial % 20;
    std::vector<std::vector<double>> curves(3, std::vector<double>(n));
    for (auto& c : curves) {
      for (double& v : c) v = std::round(u(rng) * 8.0) / 8.0;
    }
    std::vector<std::string> phases(n);
    for (std::size_t k = 0; k < n; ++k) phases[k] = k < n / 2 ? "eccentric" : "concentric";
    const auto detail = detail_from(curves, phases);

    std::vector<std::pair<std::size_t, JointId>> expect;
    for (std::size_t j = 0; j < curves.size(); ++j) {
      for (const std::string ph : {"concentric", "eccentric"}) {
        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < n; ++k) {
          const auto& c = curves[j];
          const bool peak = (k == 0 || c[k - 1] <= c[k]) && (k + 1 == n || c[k + 1] <= c[k]);
          if (phases[k] != ph || !peak || c[k] <= 0.25) continue;
          if (!best || c[k] > c[*best]) best = k;
        }
        if (best) expect.emplace_back(*best, joint_at(5 + j));
      }
    }
    std::sort(expect.begin(), expect.end());
    std::vector<std::pair<std::size_t, JointId>> got;
    for (const MistakeFlag& f : flag_mistakes(detail, 0.25)) got.emplace_back(f.detail_index, f.joint);
    EXPECT_EQ(got, expect);
  }
}

MistakeFlag flag(JointId j, double angle, std::string phase, std::string frame = "f3") {
  return {0, std::move(frame), j, 0.4, angle, std::move(phase)};
}

const CorrectionRule kAbduct{"shoulder", RulePredicate::kAngleBelow, 80.0, "eccentric", "Abduct arm"};

TEST(TextualFeedback, RuleMessageUsed) {
  const auto out = textual_feedback({flag(JointId::kLeftShoulder, 60.0, "eccentric")}, {kAbduct});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].text, "Abduct arm");
  EXPECT_EQ(out[0].joint, JointId::kLeftShoulder);
  EXPECT_EQ(out[0].key_frames, std::vector<std::string>{"f3"});
}

TEST(TextualFeedback, GenericWhenNoRuleMatches) {
  const auto wrong_phase = textual_feedback({flag(JointId::kLeftShoulder, 60.0, "concentric")}, {kAbduct});
  ASSERT_EQ(wrong_phase.size(), 1u);
  EXPECT_EQ(wrong_phase[0].text, "adjust left_shoulder toward reference");
  const auto wide = textual_feedback({flag(JointId::kRightShoulder, 95.0, "eccentric")}, {kAbduct});
  EXPECT_EQ(wide[0].text, "adjust right_shoulder toward reference");
}

TEST(TextualFeedback, EmptyWithoutFlags) { EXPECT_TRUE(textual_feedback({}, {kAbduct}).empty()); }

TEST(TextualFeedback, SameMessageMergesKeyFrames) {
  const auto out = textual_feedback({flag(JointId::kLeftShoulder, 60.0, "eccentric", "f1"),
                                     flag(JointId::kLeftShoulder, 70.0, "eccentric_2", "f9")},
                                    {kAbduct});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].key_frames, (std::vector<std::string>{"f1", "f9"}));
}

// Property: scores stay inside [0, 100] for arbitrary inputs.
TEST(Assess, ScoresBoundedUnderFuzzing) {
  std::mt19937_64 rng(55);
  ExerciseConfig c = synth::template_config(synth::Template::kPress);
  for (int trial = 0; trial < 30; ++trial) {
    const Sequence a = random_sequence(rng, 10 + trial % 7);
    const Sequence b = random_sequence(rng, 12);
    const AssessmentReport r = assess(a, b, c).report;
    for (double v : {r.joint_score, r.pace_score, *r.range_score}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 100.0);
    }
    for (const MistakeFlag& f : r.flags) EXPECT_GT(f.deviation, c.scores.flag_threshold);
  }
}

TEST(Report, ValidateRejectsOutOfRange) {
  AssessmentReport r;
  r.joint_score = 100.5;
  EXPECT_THROW(validate(r), ValidationError);
  r.joint_score = 10.0;
  r.corrections.push_back({"x", JointId::kNose, {}});
  EXPECT_THROW(validate(r), ValidationError);
}

}  // namespace
