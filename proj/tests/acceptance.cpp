// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "support.hpp"

namespace {

using namespace posecoach;
using synth::Template;
using testing_support::random_frame;
using testing_support::transform_frame;

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr std::array<Template, 3> kTemplates{Template::kSquat, Template::kPress, Template::kPull};

// 1. Similarity invariance of global normalization.
Outcome normalization_invariance() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> scale(0.2, 5.0), angle(-kPi, kPi), shift(-5000.0, 5000.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Frame f = random_frame(rng);
    const Frame g = transform_frame(f, scale(rng), angle(rng), {shift(rng), shift(rng)});
    const CanonicalSkeleton a = normalize_global(f);
    const CanonicalSkeleton b = normalize_global(g);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      worst = std::max({worst, std::abs(a.points[j].x - b.points[j].x),
                        std::abs(a.points[j].y - b.points[j].y)});
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "1000 skeletons, max coordinate error %.2e (tol 1e-9)", worst);
  return {worst <= 1e-9, buf};
}

// 2. DTW equals exhaustive monotone-path enumeration.
Outcome dtw_oracle() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<std::size_t> len(1, 8);
  int mismatches = 0;
  const std::vector<JointId> joints{JointId::kLeftShoulder, JointId::kLeftElbow, JointId::kLeftWrist,
                                    JointId::kLeftHip};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = len(rng), m = len(rng);
    std::vector<JointVectorField> a, b;
    for (std::size_t i = 0; i < n; ++i) a.push_back(joint_vectors(normalize_global(random_frame(rng)), joints));
    for (std::size_t j = 0; j < m; ++j) b.push_back(joint_vectors(normalize_global(random_frame(rng)), joints));
    const WarpPath p = dtw_align(a, b);
    const double brute = testing_support::brute_force_dtw(
        n, m, [&](std::size_t i, std::size_t j) { return frame_distance(a[i], b[j]); });
    if (p.cost != brute || !is_valid_path(p, n, m)) ++mismatches;
  }
  return {mismatches == 0, "500 pairs up to 8x8, " + std::to_string(mismatches) + " cost mismatches (exact)"};
}

synth::MotionSpec varied_spec(Template t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  synth::MotionSpec s;
  s.exercise = t;
  s.n_frames = 40 + static_cast<std::size_t>(40 * u(rng));
  s.noise_std = 1.5 * u(rng);
  s.torso_px = 70.0 + 80.0 * u(rng);
  s.rotation_deg = -15.0 + 30.0 * u(rng);
  s.center = {200.0 + 300.0 * u(rng), 200.0 + 150.0 * u(rng)};
  return s;
}

// 3. A clean recording assessed against itself is perfect.
Outcome self_identity() {
  std::mt19937_64 rng(1003);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Template t = kTemplates[i % 3];
    const Sequence s = synth::generate(varied_spec(t, rng), 3000 + i).sequence;
    const AssessmentResult r = assess(s, s, synth::template_config(t));
    const AssessmentReport& rep = r.report;
    const double dev = std::max({std::abs(rep.joint_score - 100.0), std::abs(rep.pace_score - 100.0),
                                 std::abs(rep.range_score.value_or(-1.0) - 100.0)});
    worst = std::max(worst, dev);
    std::size_t arrows = 0;
    for (const VisualAid& a : r.aids) arrows += a.arrows.size();
    if (dev > 1e-6 || !rep.flags.empty() || arrows != 0) ++bad;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "50 sequences, %d imperfect, max score gap %.2e (tol 1e-6)", bad, worst);
  return {bad == 0, buf};
}

// 4. A 20 degree offset on an elbow or knee is flagged and drawn; clean
// joints get no arrows.
Outcome error_detection() {
  std::mt19937_64 rng(1004);
  int hit = 0, clean = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const Template t = kTemplates[i % 3];
    const bool right = (i / 3) % 2 == 1;
    const std::string joint = std::string(right ? "right_" : "left_") +
                              (t == Template::kSquat ? "knee" : "elbow");
    const JointId target = *parse_joint(joint);
    synth::MotionSpec ref_spec;
    ref_spec.exercise = t;
    ref_spec.noise_std = 1.0;
    const Sequence ref = synth::generate(ref_spec, 5000 + i).sequence;
    synth::MotionSpec spec = varied_spec(t, rng);
    spec.noise_std = 1.0;
    spec.injected_errors.push_back({joint, synth::ErrorType::kAngleOffset, 20.0, synth::MotionPhase::kAll});
    const Sequence cand = synth::generate(spec, 6000 + i).sequence;
    const AssessmentResult r = assess(cand, ref, synth::template_config(t));

    bool flagged = false;
    for (const MistakeFlag& f : r.report.flags) flagged |= f.joint == target;
    bool drawn = false, stray = false;
    for (const VisualAid& a : r.aids) {
      for (const Arrow& arrow : a.arrows) {
        if (arrow.joint == target) {
          drawn = true;
        } else {
          stray = true;
        }
      }
    }
    if (flagged && drawn) ++hit;
    if (!stray) ++clean;
  }
  const double hit_rate = 100.0 * hit / trials, clean_rate = 100.0 * clean / trials;
  char buf[128];
  std::snprintf(buf, sizeof buf, "flagged+drawn %.1f%%, no stray arrows %.1f%% (need >= 95%% each)",
                hit_rate, clean_rate);
  return {hit_rate >= 95.0 && clean_rate >= 95.0, buf};
}

// 5. Pace: double speed scores exactly 50; a 0.4x eccentric phase is caught.
Outcome pace_formula() {
  PaceProfile twice;
  twice.duration_ratio = 0.5;
  twice.warp_deviation = 0.0;
  const double score = pace_score(twice);

  const ExerciseConfig c = synth::template_config(Template::kSquat);
  // Odd length so every-other-frame subsampling keeps the last frame.
  synth::MotionSpec odd;
  odd.n_frames = 65;
  const Sequence ref = synth::generate(odd, 1).sequence;
  Sequence fast = ref;
  fast.frames.clear();
  for (std::size_t i = 0; i < ref.size(); i += 2) {
    Frame f = ref[i];
    f.timestamp = 0.5 * ref[i].timestamp;
    fast.frames.push_back(f);
  }
  const AssessmentReport whole = assess(fast, ref, c).report;

  synth::MotionSpec spec;
  spec.n_frames = 80;
  const Sequence ref80 = synth::generate(spec, 2).sequence;
  spec.injected_errors.push_back({"knee", synth::ErrorType::kSpeedFactor, 2.5, synth::MotionPhase::kEccentric});
  const Sequence quick = synth::generate(spec, 2).sequence;
  const AssessmentResult r = assess(quick, ref80, c);
  double ecc_ratio = 0.0;
  for (const PhaseDuration& p : r.profile.phases) {
    if (p.name == "eccentric") ecc_ratio = p.ratio();
  }
  const auto found = detect_fast_eccentric(r.profile, 0.6);
  const bool caught = found == std::vector<std::string>{"eccentric"};

  char buf[192];
  std::snprintf(buf, sizeof buf,
                "pace(ratio 0.5, dev 0) = %.17g; half-time candidate ratio %.3f; eccentric ratio %.3f "
                "%s",
                score, whole.pace.duration_ratio, ecc_ratio, caught ? "detected" : "missed");
  return {score == 50.0 && std::abs(whole.pace.duration_ratio - 0.5) < 1e-12 && caught, buf};
}

// 6. Half the range of motion scores about 50.
Outcome range_truncation() {
  std::string detail;
  bool ok = true;
  for (Template t : kTemplates) {
    const std::string joint(side_agnostic_name(synth::template_spec(t).primary));
    synth::MotionSpec spec;
    spec.exercise = t;
    spec.noise_std = 1.0;
    const Sequence ref = synth::generate(spec, 7).sequence;
    spec.injected_errors.push_back({joint, synth::ErrorType::kRomTruncation, 0.5, synth::MotionPhase::kAll});
    const Sequence shallow = synth::generate(spec, 8).sequence;
    const double range = *assess(shallow, ref, synth::template_config(t)).report.range_score;
    ok &= range >= 45.0 && range <= 55.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%s %.2f", detail.empty() ? "" : ", ",
                  std::string(synth::to_string(t)).c_str(), range);
    detail += buf;
  }
  return {ok, detail + " (need [45, 55])"};
}

// 7. Joint score never rises as the injected offset grows.
Outcome monotonicity() {
  int violations = 0, series = 0;
  for (Template t : kTemplates) {
    const std::string joint = testing_support::primary_joint_name(t);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      synth::MotionSpec ref_spec;
      ref_spec.exercise = t;
      ref_spec.noise_std = 1.0;
      const Sequence ref = synth::generate(ref_spec, 100 + seed).sequence;
      double prev = 101.0;
      ++series;
      for (int off = 0; off <= 45; off += 5) {
        synth::MotionSpec spec = ref_spec;
        if (off > 0) {
          spec.injected_errors.push_back({joint, synth::ErrorType::kAngleOffset, static_cast<double>(off),
                                          synth::MotionPhase::kAll});
        }
        const double js = assess(synth::generate(spec, 200 + seed).sequence, ref,
                                 synth::template_config(t))
                              .report.joint_score;
        if (js > prev) ++violations;
        prev = js;
      }
    }
  }
  return {violations == 0, std::to_string(series) + " offset series (0..45 deg), " +
                               std::to_string(violations) + " increases"};
}

// 8. Transformer gradients against central differences at the default size.
Outcome gradient_check() {
  using namespace posecoach::sttf;
  STTFModel m = init_model(STTFConfig{});
  std::mt19937_64 rng(1008);
  std::normal_distribution<double> n(0.0, 0.7);
  Input x(m.config.seq_len * m.config.n_joints * 2);
  for (double& v : x) v = n(rng);
  Target y;
  y.scores = {0.9, 0.2, 0.6};
  y.labels.resize(m.config.seq_len);
  for (std::size_t t = 0; t < y.labels.size(); ++t) y.labels[t] = t % 3 == 0 ? 1.0 : 0.0;
  const Gradient g = backward(m, x, y);

  std::map<std::string, std::vector<std::size_t>> by_kind;
  for (const NamedSlice& s : m.layout.named) {
    for (std::size_t i = 0; i < s.slice.size(); ++i) by_kind[s.kind].push_back(s.slice.offset + i);
  }
  std::vector<std::size_t> picks;
  while (picks.size() < 64) {
    for (auto& [kind, idx] : by_kind) {
      if (picks.size() == 64) break;
      std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
      picks.push_back(idx[pick(rng)]);
    }
  }
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i : picks) {
    const double orig = m.params[i];
    m.params[i] = orig + h;
    const double up = loss(forward(m, x), y);
    m.params[i] = orig - h;
    const double down = loss(forward(m, x), y);
    m.params[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    // Relative error with a floor so parameters with near-zero gradient do not
    // divide by round-off.
    const double rel = std::abs(g.grad[i] - numeric) / std::max({std::abs(g.grad[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, rel);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "64 params over %zu layer kinds, worst relative error %.2e (tol 1e-4)",
                by_kind.size(), worst);
  return {worst < 1e-4, buf};
}

// 9. The score head learns to separate clean from wrong recordings.
Outcome toy_learning() {
  using namespace posecoach::sttf;
  STTFConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.spatial_layers = 1;
  c.temporal_layers = 1;
  c.seq_len = 32;
  c.seed = 1;

  const auto make = [&](std::size_t count, std::uint64_t base) {
    std::mt19937_64 rng(base);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Example> data;
    std::vector<bool> wrong;
    for (std::size_t i = 0; i < count; ++i) {
      const Template t = kTemplates[i % 3];
      synth::MotionSpec s;
      s.exercise = t;
      s.n_frames = 40 + static_cast<std::size_t>(41 * u(rng));
      s.rotation_deg = -10.0 + 20.0 * u(rng);
      s.torso_px = 80.0 + 40.0 * u(rng);
      s.noise_std = 1.0;
      const bool bad = (i / 3) % 2 == 1;
      if (bad) {
        s.injected_errors.push_back({testing_support::primary_joint_name(t), synth::ErrorType::kAngleOffset,
                                     30.0, synth::MotionPhase::kAll});
      }
      const synth::Generated g = synth::generate(s, base * 1000 + i);
      data.push_back({make_input(g.sequence, c), make_target(g.sequence, g.annotation, c)});
      wrong.push_back(bad);
    }
    return std::pair{data, wrong};
  };
  const auto [train_set, train_wrong] = make(200, 11);
  const auto [test_set, test_wrong] = make(50, 12);

  STTFModel m = init_model(c);
  TrainOptions o;
  o.epochs = 200;
  o.lr = 0.05;
  o.batch_size = 8;
  o.seed = 3;
  o.target_loss = 0.02;
  const TrainResult r = train(m, train_set, o);

  int correct = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const Output out = forward(m, test_set[i].input);
    const double mean = (out.scores[0] + out.scores[1] + out.scores[2]) / 3.0;
    correct += (mean < 0.5) == test_wrong[i];
  }
  const double acc = 100.0 * correct / static_cast<double>(test_set.size());
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu epochs, final loss %.4f, held-out accuracy %.1f%% (need >= 90%%)",
                r.loss_curve.size(), r.loss_curve.back(), acc);
  return {acc >= 90.0, buf};
}

// 10. Report rows carry exactly the six table columns and round-trip.
Outcome report_format() {
  testing_support::TempDir dir;
  const std::set<std::string> want{"name", "class", "joint", "pace", "range", "correction"};
  bool ok = true;
  std::string detail;

  const Sequence ref = testing_support::offset_recording(Template::kPress, 0.0, 1).sequence;
  const Sequence bad = testing_support::offset_recording(Template::kPress, 20.0, 2).sequence;
  ExerciseConfig with_range = synth::template_config(Template::kPress);
  ExerciseConfig without_range = with_range;
  without_range.reference_angles.clear();

  int k = 0;
  for (const ExerciseConfig* cfg : {&with_range, &without_range}) {
    const AssessmentReport r = assess(bad, ref, *cfg).report;
    const auto row_path = dir / ("r" + std::to_string(k) + ".report.json");
    const auto detail_path = dir / ("r" + std::to_string(k) + ".detail.json");
    save_report(r, row_path);
    save_report_detail(r, detail_path);
    const Json row = Json::parse(read_text_file(row_path));
    std::set<std::string> keys;
    for (const auto& [key, v] : row.items()) keys.insert(key);
    ok &= keys == want;
    if (cfg == &without_range) ok &= row.at("range") == Json(kNotApplicable);
    ok &= load_report(row_path, detail_path) == r;
    ok &= !r.corrections.empty();
    ++k;
  }
  detail = ok ? "6 columns, \"/\" range, lossless round-trip" : "format or round-trip mismatch";
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double limit_s;  // 0 = no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {"normalization invariance", normalization_invariance, 5.0},
      {"dtw oracle equivalence", dtw_oracle, 30.0},
      {"self-assessment identity", self_identity, 0.0},
      {"error detection", error_detection, 0.0},
      {"pace formula", pace_formula, 0.0},
      {"range truncation", range_truncation, 0.0},
      {"joint score monotonicity", monotonicity, 0.0},
      {"transformer gradient check", gradient_check, 60.0},
      {"toy learning", toy_learning, 300.0},
      {"report format", report_format, 0.0},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double limit = criteria[i].limit_s;
    if (limit > 0.0 && secs >= limit) o.pass = false;
    if (!o.pass) ++failures;
    char bound[32] = "";
    if (limit > 0.0) std::snprintf(bound, sizeof bound, ", limit %.0f s", limit);
    std::printf("%s %2zu %-28s %s [%.2f s%s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name.c_str(), o.detail.c_str(), secs, bound);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
