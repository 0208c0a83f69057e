// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace {

using namespace posecoach;
using testing_support::brute_force_dtw;

std::vector<JointVectorField> fields_of(const Sequence& s, const std::vector<JointId>& joints) {
  std::vector<JointVectorField> out;
  for (const Frame& f : s.frames) out.push_back(joint_vectors(normalize_global(f), joints));
  return out;
}

const std::vector<JointId> kSquatJoints{JointId::kLeftHip, JointId::kRightHip, JointId::kLeftKnee,
                                        JointId::kRightKnee, JointId::kLeftAnkle,
                                        JointId::kRightAnkle};

Sequence squat(std::size_t n, double noise = 0.0, std::uint64_t seed = 1,
               std::vector<synth::InjectedError> errors = {}) {
  synth::MotionSpec spec;
  spec.n_frames = n;
  spec.noise_std = noise;
  spec.injected_errors = std::move(errors);
  return synth::generate(spec, seed).sequence;
}

TEST(Dtw, IdenticalSequencesGiveDiagonal) {
  const auto f = fields_of(squat(40, 1.0), kSquatJoints);
  const WarpPath p = dtw_align(f, f);
  ASSERT_EQ(p.pairs.size(), f.size());
  for (std::size_t k = 0; k < p.pairs.size(); ++k) {
    EXPECT_EQ(p.pairs[k], std::pair(k, k));
  }
  EXPECT_NEAR(p.cost, 0.0, 1e-12);
}

TEST(Dtw, MatchesBruteForceOnSmallGrids) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t m = 1; m <= 6; ++m) {
      std::vector<double> c(n * m);
      for (double& x : c) x = u(rng);
      const auto cost = [&](std::size_t i, std::size_t j) { return c[i * m + j]; };
      const WarpPath p = dtw_align(n, m, cost);
      EXPECT_DOUBLE_EQ(p.cost, brute_force_dtw(n, m, cost)) << n << "x" << m;
      EXPECT_TRUE(is_valid_path(p, n, m));
      double along = 0.0;
      for (const auto& [i, j] : p.pairs) along += cost(i, j);
      EXPECT_NEAR(along, p.cost, 1e-12);
    }
  }
}

TEST(Dtw, DuplicatedFramesCostNothing) {
  // Noise keeps frames distinct (the clean motion is symmetric in time).
  const Sequence s = squat(20, 1.0);
  Sequence slow = s;
  slow.frames.clear();
  for (const Frame& f : s.frames) {
    slow.frames.push_back(f);
    slow.frames.push_back(f);
  }
  const WarpPath p = dtw_align(fields_of(slow, kSquatJoints), fields_of(s, kSquatJoints));
  EXPECT_NEAR(p.cost, 0.0, 1e-12);
  for (const auto& [i, j] : p.pairs) EXPECT_EQ(i / 2, j);
}

TEST(Dtw, TransposeGivesSameCost) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + trial % 7, m = 9 + trial % 4;
    std::vector<double> c(n * m);
    for (double& x : c) x = u(rng);
    const WarpPath a = dtw_align(n, m, [&](std::size_t i, std::size_t j) { return c[i * m + j]; });
    const WarpPath b = dtw_align(m, n, [&](std::size_t i, std::size_t j) { return c[j * m + i]; });
    EXPECT_NEAR(a.cost, b.cost, 1e-12);
  }
}

TEST(Dtw, RealSequencesGiveValidPaths) {
  const auto a = fields_of(squat(50, 2.0, 3), kSquatJoints);
  const auto b = fields_of(squat(37, 2.0, 4), kSquatJoints);
  const WarpPath p = dtw_align(a, b);
  EXPECT_TRUE(is_valid_path(p, a.size(), b.size()));
  EXPECT_GE(p.pairs.size(), std::max(a.size(), b.size()));
  EXPECT_LE(p.pairs.size(), a.size() + b.size() - 1);
}

TEST(Dtw, EmptyRejected) {
  EXPECT_THROW(dtw_align({}, fields_of(squat(10), kSquatJoints)), ValidationError);
}

TEST(ValidPath, RejectsBadSteps) {
  EXPECT_TRUE(is_valid_path({{{0, 0}, {1, 1}, {1, 2}}}, 2, 3));
  EXPECT_FALSE(is_valid_path({{{0, 0}, {1, 2}}}, 2, 3));
  EXPECT_FALSE(is_valid_path({{{0, 1}, {1, 2}}}, 2, 3));
  EXPECT_FALSE(is_valid_path({{{0, 0}, {1, 1}}}, 2, 3));
  EXPECT_FALSE(is_valid_path({{{0, 0}, {0, 0}, {1, 1}}}, 2, 2));
}

PhaseConfig squat_phase() { return synth::template_config(synth::Template::kSquat).phase; }

WarpPath align(const Sequence& a, const Sequence& b) {
  return dtw_align(fields_of(a, kSquatJoints), fields_of(b, kSquatJoints));
}

TEST(PaceProfile, IdentityHasUnitRatio) {
  const Sequence s = squat(64, 1.0);
  const PaceProfile p = pace_profile(s, s, align(s, s), squat_phase());
  EXPECT_DOUBLE_EQ(p.duration_ratio, 1.0);
  EXPECT_DOUBLE_EQ(p.warp_deviation, 0.0);
  ASSERT_EQ(p.phases.size(), 2u);
  EXPECT_EQ(p.phases[0].name, "eccentric");
  EXPECT_EQ(p.phases[1].name, "concentric");
  for (const PhaseDuration& d : p.phases) EXPECT_DOUBLE_EQ(d.ratio(), 1.0);
  EXPECT_TRUE(detect_fast_eccentric(p).empty());
}

TEST(PaceProfile, EveryOtherFrameIsTwiceAsFast) {
  const Sequence ref = squat(65);
  Sequence fast = ref;
  fast.frames.clear();
  for (std::size_t i = 0; i < ref.size(); i += 2) {
    Frame f = ref[i];
    f.timestamp = ref[i / 2].timestamp;
    fast.frames.push_back(f);
  }
  const PaceProfile p = pace_profile(fast, ref, align(fast, ref), squat_phase());
  EXPECT_DOUBLE_EQ(p.duration_ratio, 0.5);
  EXPECT_LT(p.warp_deviation, 0.05);
  for (const PhaseDuration& d : p.phases) EXPECT_NEAR(d.ratio(), 0.5, 0.05);
}

TEST(PaceProfile, FastDescentMeasuredNearHalf) {
  const Sequence ref = squat(64, 0.5, 5);
  const Sequence fast = squat(
      64, 0.5, 6, {{"left_knee", synth::ErrorType::kSpeedFactor, 2.0, synth::MotionPhase::kEccentric}});
  const PaceProfile p = pace_profile(fast, ref, align(fast, ref), squat_phase());
  ASSERT_FALSE(p.phases.empty());
  EXPECT_EQ(p.phases[0].name, "eccentric");
  EXPECT_NEAR(p.phases[0].ratio(), 0.5, 0.05);
  EXPECT_EQ(detect_fast_eccentric(p), std::vector<std::string>{"eccentric"});
}

TEST(PaceProfile, BrokenPathRejected) {
  const Sequence s = squat(10);
  EXPECT_THROW(pace_profile(s, s, WarpPath{{{0, 0}}, 0.0}, squat_phase()), ValidationError);
}

TEST(DetectFastEccentric, ThresholdIsStrict) {
  PaceProfile p;
  p.phases = {{"eccentric", 0.6, 1.0, 0, 1},
              {"concentric", 0.1, 1.0, 1, 2},
              {"eccentric_2", 0.59, 1.0, 2, 3}};
  EXPECT_EQ(detect_fast_eccentric(p, 0.6), std::vector<std::string>{"eccentric_2"});
}

// Property: only eccentric phases below the ratio threshold are reported.
TEST(DetectFastEccentric, MatchesFilterOracle) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    PaceProfile p;
    std::vector<std::string> expect;
    for (int k = 0; k < 4; ++k) {
      const std::string name = (coin(rng) ? "eccentric" : "concentric") + std::string("_") +
                               std::to_string(k);
      const double c = u(rng), r = u(rng);
      p.phases.push_back({name, c, r, 0, 0});
      if (name.rfind("eccentric", 0) == 0 && c / r < 0.6) expect.push_back(name);
    }
    EXPECT_EQ(detect_fast_eccentric(p, 0.6), expect);
  }
}

TEST(SegmentPhases, MonotoneCurveIsSinglePhase) {
  std::vector<double> a;
  for (int i = 0; i < 30; ++i) a.push_back(170.0 - 3.0 * i);
  const auto p = segment_phases(a, PhaseConfig{});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].name, "full");
}

TEST(SegmentPhases, TwoRepetitions) {
  std::vector<double> a;
  for (int i = 0; i <= 80; ++i) a.push_back(130.0 + 45.0 * std::cos(2.0 * kPi * i / 40.0));
  const auto p = segment_phases(a, PhaseConfig{});
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[0].name, "eccentric");
  EXPECT_EQ(p[1].name, "concentric");
  EXPECT_EQ(p[2].name, "eccentric_2");
  EXPECT_EQ(p[3].name, "concentric_2");
  EXPECT_NEAR(static_cast<double>(p[0].end), 20.0, 1.0);
  for (std::size_t k = 1; k < p.size(); ++k) EXPECT_EQ(p[k].begin, p[k - 1].end);
}

TEST(SegmentPhases, PullInvertsDirection) {
  std::vector<double> a;
  for (int i = 0; i <= 40; ++i) a.push_back(140.0 - 30.0 * std::cos(2.0 * kPi * i / 40.0));
  PhaseConfig c;
  c.eccentric_decreasing = false;
  const auto p = segment_phases(a, c);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].name, "eccentric");
}

TEST(SegmentPhases, SmallWobbleIgnored) {
  std::vector<double> a;
  for (int i = 0; i < 40; ++i) a.push_back(150.0 + 1.0 * std::sin(i));
  EXPECT_EQ(segment_phases(a, PhaseConfig{}).size(), 1u);
}

TEST(WarpDeviation, DiagonalIsZeroCornerIsLarge) {
  WarpPath diag;
  for (std::size_t i = 0; i < 10; ++i) diag.pairs.emplace_back(i, i);
  EXPECT_DOUBLE_EQ(warp_deviation(diag, 10, 10), 0.0);
  WarpPath corner;
  for (std::size_t i = 0; i < 10; ++i) corner.pairs.emplace_back(i, 0);
  for (std::size_t j = 1; j < 10; ++j) corner.pairs.emplace_back(9, j);
  EXPECT_GT(warp_deviation(corner, 10, 10), 0.9);
}

}  // namespace
