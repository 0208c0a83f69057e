// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posecoach/normalization.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

struct Arrow {
  JointId joint;
  Vec2 from;  // candidate joint, pixels
  Vec2 to;    // reference joint mapped into the candidate image, pixels
  friend bool operator==(const Arrow&, const Arrow&) = default;
};

struct VisualAid {
  std::string frame_id;
  std::vector<Arrow> arrows;
  std::string caption;
  std::vector<JointId> skipped;  // flagged but occluded in either frame
};

// Arrows from each flagged candidate joint to where the reference puts it,
// with the reference position taken through the inverse of the candidate's
// normalization. Arrows shorter than min_arrow_px are dropped.
inline VisualAid build_aid(const Frame& cand_frame, const NormalizationTransform& cand_transform,
                           const CanonicalSkeleton& ref, const std::vector<JointId>& flags,
                           std::string caption, double min_arrow_px = 2.0,
                           double occlusion_threshold = kDefaultOcclusionThreshold) {
  VisualAid aid;
  aid.frame_id = cand_frame.id;
  aid.caption = std::move(caption);
  std::vector<JointId> seen;
  for (JointId j : flags) {
    if (std::find(seen.begin(), seen.end(), j) != seen.end()) continue;
    seen.push_back(j);
    if (cand_frame.occluded(j, occlusion_threshold) || ref.is_occluded(j)) {
      aid.skipped.push_back(j);
      continue;
    }
    const Vec2 from = cand_frame[j];
    const Vec2 to = cand_transform.invert(ref[j]);
    if (distance(from, to) < min_arrow_px) continue;
    aid.arrows.push_back({j, from, to});
  }
  return aid;
}

// COCO limb list used for drawing.
inline const std::vector<std::pair<JointId, JointId>>& coco_limbs() {
  using J = JointId;
  static const std::vector<std::pair<J, J>> limbs = {
      {J::kLeftAnkle, J::kLeftKnee},         {J::kLeftKnee, J::kLeftHip},
      {J::kRightAnkle, J::kRightKnee},       {J::kRightKnee, J::kRightHip},
      {J::kLeftHip, J::kRightHip},           {J::kLeftShoulder, J::kLeftHip},
      {J::kRightShoulder, J::kRightHip},     {J::kLeftShoulder, J::kRightShoulder},
      {J::kLeftShoulder, J::kLeftElbow},     {J::kRightShoulder, J::kRightElbow},
      {J::kLeftElbow, J::kLeftWrist},        {J::kRightElbow, J::kRightWrist},
      {J::kLeftEye, J::kRightEye},           {J::kNose, J::kLeftEye},
      {J::kNose, J::kRightEye},              {J::kLeftEye, J::kLeftEar},
      {J::kRightEye, J::kRightEar},          {J::kLeftEar, J::kLeftShoulder},
      {J::kRightEar, J::kRightShoulder},
  };
  return limbs;
}

namespace detail {

inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string xml_escape(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// SVG 1.1 overlay: limbs as lines, joints as circles, one arrow per
// correction, caption at the top. Output depends only on the inputs.
inline std::string render_svg(const VisualAid& aid, const Frame& skeleton, int width, int height,
                              double occlusion_threshold = kDefaultOcclusionThreshold) {
  using detail::fmt2;
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
         std::to_string(width) + " " + std::to_string(height) + "\">\n";
  svg += "  <defs>\n";
  svg += "    <marker id=\"arrowhead\" markerWidth=\"10\" markerHeight=\"7\" refX=\"10\" "
         "refY=\"3.5\" orient=\"auto\"><polygon points=\"0 0, 10 3.5, 0 7\" "
         "fill=\"#d62728\"/></marker>\n";
  svg += "  </defs>\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" fill=\"#ffffff\"/>\n";

  svg += "  <g id=\"limbs\" stroke=\"#1f77b4\" stroke-width=\"3\">\n";
  for (const auto& [a, b] : coco_limbs()) {
    if (skeleton.occluded(a, occlusion_threshold) || skeleton.occluded(b, occlusion_threshold)) {
      continue;
    }
    svg += "    <line x1=\"" + fmt2(skeleton[a].x) + "\" y1=\"" + fmt2(skeleton[a].y) +
           "\" x2=\"" + fmt2(skeleton[b].x) + "\" y2=\"" + fmt2(skeleton[b].y) + "\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <g id=\"joints\" fill=\"#ff7f0e\">\n";
  for (JointId j : all_joints()) {
    if (skeleton.occluded(j, occlusion_threshold)) continue;
    svg += "    <circle cx=\"" + fmt2(skeleton[j].x) + "\" cy=\"" + fmt2(skeleton[j].y) +
           "\" r=\"4\"><title>" + std::string(name(j)) + "</title></circle>\n";
  }
  svg += "  </g>\n";

  svg += "  <g id=\"arrows\" stroke=\"#d62728\" stroke-width=\"2\">\n";
  for (const Arrow& a : aid.arrows) {
    svg += "    <line class=\"arrow\" data-joint=\"" + std::string(name(a.joint)) + "\" x1=\"" +
           fmt2(a.from.x) + "\" y1=\"" + fmt2(a.from.y) + "\" x2=\"" + fmt2(a.to.x) +
           "\" y2=\"" + fmt2(a.to.y) + "\" marker-end=\"url(#arrowhead)\"/>\n";
  }
  svg += "  </g>\n";

  if (!aid.caption.empty()) {
    svg += "  <text x=\"10\" y=\"24\" font-family=\"sans-serif\" font-size=\"18\" "
           "fill=\"#000000\">" +
           detail::xml_escape(aid.caption) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace posecoach
