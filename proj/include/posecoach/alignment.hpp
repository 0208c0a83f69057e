// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "posecoach/errors.hpp"
#include "posecoach/kinematics.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

struct WarpPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (candidate, reference)
  double cost = 0.0;
};

// True when the path is anchored at both corners and every step advances
// one or both indices by exactly one.
inline bool is_valid_path(const WarpPath& p, std::size_t n_cand, std::size_t n_ref) {
  if (p.pairs.empty() || n_cand == 0 || n_ref == 0) return false;
  if (p.pairs.front() != std::pair<std::size_t, std::size_t>{0, 0}) return false;
  if (p.pairs.back() != std::pair{n_cand - 1, n_ref - 1}) return false;
  for (std::size_t k = 1; k < p.pairs.size(); ++k) {
    const auto [i0, j0] = p.pairs[k - 1];
    const auto [i1, j1] = p.pairs[k];
    const std::size_t di = i1 - i0;
    const std::size_t dj = j1 - j0;
    if (i1 < i0 || j1 < j0 || di > 1 || dj > 1 || di + dj == 0) return false;
  }
  return true;
}

// Minimum-cost monotone alignment over an n x m grid of non-negative step
// costs. Backtracking breaks ties toward the diagonal, then toward the step
// that advanced the candidate index.
template <typename CostFn>
WarpPath dtw_align(std::size_t n, std::size_t m, CostFn&& cost) {
  if (n == 0 || m == 0) throw ValidationError("dtw_align: empty sequence");
  std::vector<double> acc(n * m);
  const auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost(i, j);
      if (i == 0 && j == 0) {
        at(i, j) = c;
      } else if (i == 0) {
        at(i, j) = c + at(i, j - 1);
      } else if (j == 0) {
        at(i, j) = c + at(i - 1, j);
      } else {
        at(i, j) = c + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      }
    }
  }

  WarpPath path;
  path.cost = at(n - 1, m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

// Frame cost is 1 - mean cosine between joint-vector descriptors.
inline double frame_distance(const JointVectorField& a, const JointVectorField& b) {
  return std::max(0.0, 1.0 - frame_cosine(a, b));
}

inline WarpPath dtw_align(const std::vector<JointVectorField>& cand,
                          const std::vector<JointVectorField>& ref) {
  if (cand.empty() || ref.empty()) throw ValidationError("dtw_align: empty sequence");
  return dtw_align(cand.size(), ref.size(), [&](std::size_t i, std::size_t j) {
    return frame_distance(cand[i], ref[j]);
  });
}

// Phase segmentation settings for one exercise.
struct PhaseConfig {
  JointId primary_joint = JointId::kLeftKnee;
  // The eccentric phase is where the primary angle decreases (squat descent,
  // bench press lowering). Pull-ups invert this.
  bool eccentric_decreasing = true;
  double min_ratio = 0.6;
  std::size_t smoothing_window = 5;
  // A direction change only counts once the angle has moved back this far.
  double min_excursion_deg = 5.0;
};

struct Phase {
  std::string name;
  std::size_t begin = 0;  // frame index, inclusive
  std::size_t end = 0;    // frame index, inclusive; shared with the next phase
};

struct PhaseDuration {
  std::string name;
  double candidate_seconds = 0.0;
  double reference_seconds = 0.0;
  std::size_t candidate_begin = 0;
  std::size_t candidate_end = 0;

  double ratio() const {
    return reference_seconds > 0.0 ? candidate_seconds / reference_seconds
                                   : std::numeric_limits<double>::infinity();
  }
};

struct PaceProfile {
  double duration_ratio = 1.0;
  double warp_deviation = 0.0;
  std::vector<PhaseDuration> phases;
};

// Centered moving average; the window shrinks at the ends.
inline std::vector<double> moving_average(const std::vector<double>& x, std::size_t window) {
  if (window <= 1 || x.empty()) return x;
  const std::size_t half = window / 2;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size() - 1, i + half);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += x[k];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// Splits an angle curve at its turning points. A monotone curve (or one with
// no reversal larger than min_excursion_deg) yields a single phase "full".
inline std::vector<Phase> segment_phases(const std::vector<double>& angles,
                                         const PhaseConfig& cfg) {
  const std::size_t n = angles.size();
  if (n < 2) throw DegenerateError("segment_phases: fewer than 2 frames");
  const std::vector<double> s = moving_average(angles, cfg.smoothing_window);
  const double exc = cfg.min_excursion_deg;

  std::vector<std::size_t> bounds{0};
  int dir = 0;
  std::size_t ext = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (dir == 0) {
      if (s[i] - s[0] >= exc) {
        dir = 1;
        ext = i;
      } else if (s[0] - s[i] >= exc) {
        dir = -1;
        ext = i;
      }
    } else if (dir > 0) {
      if (s[i] >= s[ext]) {
        ext = i;
      } else if (s[ext] - s[i] >= exc) {
        bounds.push_back(ext);
        dir = -1;
        ext = i;
      }
    } else {
      if (s[i] <= s[ext]) {
        ext = i;
      } else if (s[i] - s[ext] >= exc) {
        bounds.push_back(ext);
        dir = 1;
        ext = i;
      }
    }
  }
  bounds.push_back(n - 1);

  if (bounds.size() < 3) return {{"full", 0, n - 1}};

  // Smoothing drags a turning point toward the slower side of an asymmetric
  // turn; move each one to the raw extremum within half a window.
  const std::size_t half = cfg.smoothing_window / 2;
  for (std::size_t k = 1; k + 1 < bounds.size(); ++k) {
    const bool is_min = s[bounds[k]] < s[bounds[k - 1]];
    const std::size_t lo = std::max(bounds[k - 1] + 1, bounds[k] >= half ? bounds[k] - half : 0);
    const std::size_t hi = std::min(bounds[k + 1] - 1, bounds[k] + half);
    std::size_t best = bounds[k];
    for (std::size_t i = lo; i <= hi; ++i) {
      if (is_min ? angles[i] < angles[best] : angles[i] > angles[best]) best = i;
    }
    bounds[k] = best;
  }

  std::vector<Phase> phases;
  int n_ecc = 0;
  int n_con = 0;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const bool decreasing = s[bounds[k + 1]] < s[bounds[k]];
    const bool eccentric = decreasing == cfg.eccentric_decreasing;
    const int nth = eccentric ? ++n_ecc : ++n_con;
    std::string label = eccentric ? "eccentric" : "concentric";
    if (nth > 1) label += "_" + std::to_string(nth);
    phases.push_back({std::move(label), bounds[k], bounds[k + 1]});
  }
  return phases;
}

inline std::vector<Phase> segment_phases(const Sequence& seq, const PhaseConfig& cfg,
                                         double occlusion_threshold =
                                             kDefaultOcclusionThreshold) {
  return segment_phases(angle_series(seq, cfg.primary_joint, occlusion_threshold), cfg);
}

// Mean normalized distance of the path from the diagonal, doubled and clamped
// to [0, 1].
inline double warp_deviation(const WarpPath& path, std::size_t n_cand, std::size_t n_ref) {
  if (path.pairs.empty()) return 0.0;
  const double nc = n_cand > 1 ? static_cast<double>(n_cand - 1) : 1.0;
  const double nr = n_ref > 1 ? static_cast<double>(n_ref - 1) : 1.0;
  double sum = 0.0;
  for (const auto& [i, j] : path.pairs) {
    sum += std::abs(static_cast<double>(i) / nc - static_cast<double>(j) / nr);
  }
  return std::clamp(2.0 * sum / static_cast<double>(path.pairs.size()), 0.0, 1.0);
}

inline PaceProfile pace_profile(const Sequence& cand, const Sequence& ref, const WarpPath& path,
                                const PhaseConfig& cfg,
                                double occlusion_threshold = kDefaultOcclusionThreshold) {
  if (!is_valid_path(path, cand.size(), ref.size())) {
    throw ValidationError("pace_profile: warp path does not span both sequences");
  }
  PaceProfile prof;
  if (!(ref.duration() > 0.0)) throw DegenerateError("reference has zero duration");
  prof.duration_ratio = cand.duration() / ref.duration();
  prof.warp_deviation = warp_deviation(path, cand.size(), ref.size());

  const std::vector<Phase> cp = segment_phases(cand, cfg, occlusion_threshold);
  const std::vector<Phase> rp = segment_phases(ref, cfg, occlusion_threshold);
  const auto span = [](const Sequence& s, std::size_t b, std::size_t e) {
    return s[e].timestamp - s[b].timestamp;
  };

  bool same_shape = cp.size() == rp.size();
  for (std::size_t k = 0; same_shape && k < cp.size(); ++k) same_shape = cp[k].name == rp[k].name;

  if (same_shape) {
    for (std::size_t k = 0; k < cp.size(); ++k) {
      prof.phases.push_back({cp[k].name, span(cand, cp[k].begin, cp[k].end),
                             span(ref, rp[k].begin, rp[k].end), cp[k].begin, cp[k].end});
    }
    return prof;
  }

  // Segmentations disagree: carry the reference boundaries over to the
  // candidate through the warp path (first candidate frame aligned to each
  // reference boundary).
  const auto cand_at = [&](std::size_t ref_frame) {
    for (const auto& [i, j] : path.pairs) {
      if (j == ref_frame) return i;
    }
    return cand.size() - 1;
  };
  for (std::size_t k = 0; k < rp.size(); ++k) {
    const std::size_t b = k == 0 ? 0 : cand_at(rp[k].begin);
    const std::size_t e = k + 1 == rp.size() ? cand.size() - 1 : cand_at(rp[k].end);
    prof.phases.push_back({rp[k].name, span(cand, b, e), span(ref, rp[k].begin, rp[k].end), b, e});
  }
  return prof;
}

// Eccentric phases performed faster than min_ratio of the reference duration.
inline std::vector<std::string> detect_fast_eccentric(const PaceProfile& profile,
                                                      double min_ratio = 0.6) {
  std::vector<std::string> out;
  for (const PhaseDuration& p : profile.phases) {
    if (p.name.rfind("eccentric", 0) == 0 && p.reference_seconds > 0.0 && p.ratio() < min_ratio) {
      out.push_back(p.name);
    }
  }
  return out;
}

}  // namespace posecoach
