// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// JSON file formats: keypoint sequences, annotations, exercise configs and
// assessment reports.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "posecoach/assessment.hpp"
#include "posecoach/config.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach {

using Json = nlohmann::ordered_json;

// --- files -------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temp file and renames it over the target, so readers
// never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError("malformed JSON in " + origin + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

namespace detail {

template <typename T>
T get_field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(where + ": bad field '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get_field<T>(j, key, where);
}

inline JointId joint_field(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": joint must be a name");
  const auto id = parse_joint(j.get<std::string>());
  if (!id) throw ValidationError(where + ": unknown joint '" + j.get<std::string>() + "'");
  return *id;
}

inline std::vector<JointId> joint_group_list(const Json& arr, const std::string& where) {
  if (!arr.is_array()) throw ValidationError(where + ": expected an array of joint names");
  std::vector<JointId> out;
  for (const Json& e : arr) {
    if (!e.is_string()) throw ValidationError(where + ": joint names must be strings");
    for (JointId j : parse_joint_group(e.get<std::string>())) out.push_back(j);
  }
  return out;
}

inline std::map<JointId, AngleRange> range_table(const Json& obj, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object of joint ranges");
  std::map<JointId, AngleRange> out;
  for (const auto& [key, val] : obj.items()) {
    if (!val.is_array() || val.size() != 2 || !val[0].is_number() || !val[1].is_number()) {
      throw ValidationError(where + ": range for '" + key + "' must be [min_deg, max_deg]");
    }
    const AngleRange r{val[0].get<double>(), val[1].get<double>()};
    if (!(r.min_deg <= r.max_deg)) {
      throw ValidationError(where + ": range for '" + key + "' has min > max");
    }
    for (JointId j : parse_joint_group(key)) out[j] = r;
  }
  return out;
}

inline Json range_table_json(const std::map<JointId, AngleRange>& m) {
  Json out = Json::object();
  for (const auto& [j, r] : m) out[std::string(name(j))] = Json::array({r.min_deg, r.max_deg});
  return out;
}

inline Json joint_list_json(const std::vector<JointId>& joints) {
  Json out = Json::array();
  for (JointId j : joints) out.push_back(std::string(name(j)));
  return out;
}

inline Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline std::optional<double> number_or_null(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline void read_keypoint(const Json& kp, Frame& f, std::size_t slot, const std::string& where) {
  if (!kp.is_array() || kp.size() < 2 || kp.size() > 3) {
    throw ValidationError(where + ": keypoint " + std::string(kJointNames[slot]) +
                          " must be [x, y] or [x, y, conf]");
  }
  for (const Json& v : kp) {
    if (!v.is_number()) {
      throw ValidationError(where + ": keypoint " + std::string(kJointNames[slot]) +
                            " has a non-numeric value");
    }
  }
  f.points[slot] = {kp[0].get<double>(), kp[1].get<double>()};
  f.confidence[slot] = kp.size() == 3 ? kp[2].get<double>() : 1.0;
}

// Keypoints may come as 17 COCO-ordered triples, an object keyed by joint
// name, or a list of {"joint", "x", "y", "conf"} records in any order.
inline void read_keypoints(const Json& kps, Frame& f, const std::string& where) {
  std::array<bool, kNumJoints> seen{};
  if (kps.is_array() && (kps.empty() || kps[0].is_array())) {
    if (kps.size() > kNumJoints) throw ValidationError(where + ": more than 17 keypoints");
    for (std::size_t i = 0; i < kps.size(); ++i) {
      read_keypoint(kps[i], f, i, where);
      seen[i] = true;
    }
  } else if (kps.is_object()) {
    for (const auto& [key, val] : kps.items()) {
      const auto j = parse_joint(key);
      if (!j) throw ValidationError(where + ": unknown joint '" + key + "'");
      read_keypoint(val, f, index(*j), where);
      seen[index(*j)] = true;
    }
  } else if (kps.is_array()) {
    for (const Json& rec : kps) {
      const JointId j = joint_field(rec.value("joint", Json()), where);
      Json triple = Json::array({rec.value("x", Json()), rec.value("y", Json())});
      if (rec.contains("conf")) triple.push_back(rec.at("conf"));
      read_keypoint(triple, f, index(j), where);
      seen[index(j)] = true;
    }
  } else {
    throw ValidationError(where + ": 'keypoints' must be an array or object");
  }
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (!seen[i]) {
      throw ValidationError(where + ": missing joint " + std::string(kJointNames[i]));
    }
  }
}

}  // namespace detail

// --- sequences ---------------------------------------------------------------

inline Sequence sequence_from_json(const Json& j, const std::string& origin = "sequence") {
  if (!j.is_object()) throw ValidationError(origin + ": expected a JSON object");
  Sequence s;
  s.exercise_id = detail::get_field<std::string>(j, "exercise_id", origin);
  s.label = parse_class_label(detail::get_or<std::string>(j, "class", "groundtruth", origin));
  if (j.contains("fps") && !j.at("fps").is_null()) s.fps = detail::get_field<double>(j, "fps", origin);

  const Json& frames = j.contains("frames") ? j.at("frames") : Json();
  if (!frames.is_array()) throw ValidationError(origin + ": 'frames' must be an array");
  s.frames.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Json& fj = frames[i];
    const std::string where = origin + ": frame " + std::to_string(i);
    if (!fj.is_object()) throw ValidationError(where + ": expected an object");
    Frame f;
    f.id = fj.contains("id") ? detail::get_field<std::string>(fj, "id", where) : std::to_string(i);
    if (fj.contains("t") && !fj.at("t").is_null()) {
      f.timestamp = detail::get_field<double>(fj, "t", where);
    } else if (s.fps) {
      f.timestamp = static_cast<double>(i) / *s.fps;
    } else {
      throw ValidationError(where + ": no timestamp and no fps to synthesize one");
    }
    if (!fj.contains("keypoints")) throw ValidationError(where + ": missing field 'keypoints'");
    detail::read_keypoints(fj.at("keypoints"), f, where);
    s.frames.push_back(std::move(f));
  }
  validate(s);
  return s;
}

inline Json to_json(const Sequence& s) {
  Json j;
  j["exercise_id"] = s.exercise_id;
  j["class"] = std::string(to_string(s.label));
  j["fps"] = s.fps ? Json(*s.fps) : Json(nullptr);
  Json frames = Json::array();
  for (const Frame& f : s.frames) {
    Json kps = Json::array();
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      kps.push_back(Json::array({f.points[i].x, f.points[i].y, f.confidence[i]}));
    }
    frames.push_back(Json{{"id", f.id}, {"t", f.timestamp}, {"keypoints", std::move(kps)}});
  }
  j["frames"] = std::move(frames);
  return j;
}

inline Sequence load_sequence(const std::filesystem::path& path) {
  return sequence_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

inline void save_sequence(const Sequence& s, const std::filesystem::path& path) {
  write_file_atomic(path, dump(to_json(s)));
}

// --- annotations -------------------------------------------------------------

inline Annotation annotation_from_json(const Json& j, const std::string& origin = "annotation") {
  if (!j.is_object()) throw ValidationError(origin + ": expected a JSON object");
  Annotation a;
  a.exercise_id = detail::get_field<std::string>(j, "exercise_id", origin);
  if (j.contains("targeted_joints")) {
    a.targeted_joints = detail::joint_group_list(j.at("targeted_joints"), origin);
  }
  if (j.contains("reference_angles")) {
    a.reference_angles = detail::range_table(j.at("reference_angles"), origin);
  }
  if (j.contains("rom_limits")) a.rom_limits = detail::range_table(j.at("rom_limits"), origin);
  if (j.contains("per_frame_mistakes")) {
    const Json& arr = j.at("per_frame_mistakes");
    if (!arr.is_array()) throw ValidationError(origin + ": per_frame_mistakes must be an array");
    for (const Json& m : arr) {
      a.per_frame_mistakes.push_back({detail::get_field<std::string>(m, "frame", origin),
                                      detail::joint_field(m.value("joint", Json()), origin),
                                      detail::get_or<std::string>(m, "note", "", origin)});
    }
  }
  if (j.contains("scores") && !j.at("scores").is_null()) {
    const Json& sc = j.at("scores");
    a.scores = ScoreTriple{detail::get_field<double>(sc, "joint", origin),
                           detail::get_field<double>(sc, "pace", origin),
                           detail::get_field<double>(sc, "range", origin)};
  }
  validate(a);
  return a;
}

inline Json to_json(const Annotation& a) {
  Json j;
  j["exercise_id"] = a.exercise_id;
  j["targeted_joints"] = detail::joint_list_json(a.targeted_joints);
  j["reference_angles"] = detail::range_table_json(a.reference_angles);
  j["rom_limits"] = detail::range_table_json(a.rom_limits);
  Json mistakes = Json::array();
  for (const MistakeNote& m : a.per_frame_mistakes) {
    mistakes.push_back({{"frame", m.frame_id}, {"joint", std::string(name(m.joint))}, {"note", m.note}});
  }
  j["per_frame_mistakes"] = std::move(mistakes);
  j["scores"] = a.scores ? Json{{"joint", a.scores->joint},
                                {"pace", a.scores->pace},
                                {"range", a.scores->range}}
                         : Json(nullptr);
  return j;
}

inline Annotation load_annotation(const std::filesystem::path& path) {
  return annotation_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

inline void save_annotation(const Annotation& a, const std::filesystem::path& path) {
  write_file_atomic(path, dump(to_json(a)));
}

// --- exercise config ---------------------------------------------------------

inline RulePredicate parse_predicate(const std::string& key) {
  if (key == "angle_above") return RulePredicate::kAngleAbove;
  if (key == "angle_below") return RulePredicate::kAngleBelow;
  if (key == "deviation_above") return RulePredicate::kDeviationAbove;
  throw ValidationError("unknown rule predicate '" + key + "'");
}

inline std::string_view to_string(RulePredicate p) {
  switch (p) {
    case RulePredicate::kAngleAbove: return "angle_above";
    case RulePredicate::kAngleBelow: return "angle_below";
    case RulePredicate::kDeviationAbove: return "deviation_above";
  }
  return "deviation_above";
}

inline ExerciseConfig config_from_json(const Json& j, const std::string& origin = "config") {
  if (!j.is_object()) throw ValidationError(origin + ": expected a JSON object");
  ExerciseConfig c;
  c.exercise_id = detail::get_field<std::string>(j, "exercise_id", origin);
  c.region = parse_body_region(detail::get_or<std::string>(j, "class", "Both", origin));
  if (j.contains("targeted_joints")) {
    c.targeted_joints = sorted_unique(detail::joint_group_list(j.at("targeted_joints"), origin));
  }
  if (j.contains("reference_angles")) {
    c.reference_angles = detail::range_table(j.at("reference_angles"), origin);
  }
  if (j.contains("rom_limits")) c.rom_limits = detail::range_table(j.at("rom_limits"), origin);
  c.key_joint_threshold_deg =
      detail::get_or<double>(j, "key_joint_threshold_deg", c.key_joint_threshold_deg, origin);
  c.occlusion_threshold =
      detail::get_or<double>(j, "occlusion_threshold", c.occlusion_threshold, origin);
  c.pace_message = detail::get_or<std::string>(j, "pace_message", c.pace_message, origin);

  if (j.contains("phase")) {
    const Json& p = j.at("phase");
    const std::string where = origin + ": phase";
    if (p.contains("primary_joint")) c.phase.primary_joint = detail::joint_field(p.at("primary_joint"), where);
    const std::string ecc = detail::get_or<std::string>(p, "eccentric", "decreasing", where);
    if (ecc != "decreasing" && ecc != "increasing") {
      throw ValidationError(where + ": eccentric must be 'decreasing' or 'increasing'");
    }
    c.phase.eccentric_decreasing = ecc == "decreasing";
    c.phase.min_ratio = detail::get_or<double>(p, "min_ratio", c.phase.min_ratio, where);
    c.phase.smoothing_window =
        detail::get_or<std::size_t>(p, "smoothing_window", c.phase.smoothing_window, where);
    c.phase.min_excursion_deg =
        detail::get_or<double>(p, "min_excursion_deg", c.phase.min_excursion_deg, where);
  }

  if (j.contains("rules")) {
    const Json& rules = j.at("rules");
    if (!rules.is_array()) throw ValidationError(origin + ": rules must be an array");
    for (const Json& r : rules) {
      const std::string where = origin + ": rule";
      CorrectionRule rule;
      rule.joint = detail::get_field<std::string>(r, "joint", where);
      rule.message = detail::get_field<std::string>(r, "message", where);
      if (!r.contains("predicate") || !r.at("predicate").is_object()) {
        throw ValidationError(where + ": missing predicate object");
      }
      bool have = false;
      for (const auto& [key, val] : r.at("predicate").items()) {
        if (key == "phase") {
          rule.phase = val.get<std::string>();
          continue;
        }
        if (have) throw ValidationError(where + ": predicate has more than one condition");
        rule.predicate = parse_predicate(key);
        if (!val.is_number()) throw ValidationError(where + ": predicate value must be a number");
        rule.value = val.get<double>();
        have = true;
      }
      if (!have) throw ValidationError(where + ": predicate has no condition");
      c.rules.push_back(std::move(rule));
    }
  }

  if (j.contains("scores")) {
    const Json& k = j.at("scores");
    const std::string where = origin + ": scores";
    ScoreConstants& s = c.scores;
    s.flag_threshold = detail::get_or<double>(k, "flag_threshold", s.flag_threshold, where);
    s.deviation_scale_deg =
        detail::get_or<double>(k, "deviation_scale_deg", s.deviation_scale_deg, where);
    s.pace_ratio_weight = detail::get_or<double>(k, "pace_ratio_weight", s.pace_ratio_weight, where);
    s.pace_warp_weight = detail::get_or<double>(k, "pace_warp_weight", s.pace_warp_weight, where);
    s.arrow_min_px = detail::get_or<double>(k, "arrow_min_px", s.arrow_min_px, where);
    s.range_smoothing_window =
        detail::get_or<std::size_t>(k, "range_smoothing_window", s.range_smoothing_window, where);
  }
  validate(c);
  return c;
}

inline Json to_json(const ExerciseConfig& c) {
  Json j;
  j["exercise_id"] = c.exercise_id;
  j["class"] = std::string(to_string(c.region));
  j["targeted_joints"] = detail::joint_list_json(c.targeted_joints);
  j["reference_angles"] = detail::range_table_json(c.reference_angles);
  j["rom_limits"] = detail::range_table_json(c.rom_limits);
  j["key_joint_threshold_deg"] = c.key_joint_threshold_deg;
  j["occlusion_threshold"] = c.occlusion_threshold;
  j["pace_message"] = c.pace_message;
  j["phase"] = {{"primary_joint", std::string(name(c.phase.primary_joint))},
                {"eccentric", c.phase.eccentric_decreasing ? "decreasing" : "increasing"},
                {"min_ratio", c.phase.min_ratio},
                {"smoothing_window", c.phase.smoothing_window},
                {"min_excursion_deg", c.phase.min_excursion_deg}};
  Json rules = Json::array();
  for (const CorrectionRule& r : c.rules) {
    Json pred;
    pred[std::string(to_string(r.predicate))] = r.value;
    if (r.phase) pred["phase"] = *r.phase;
    rules.push_back({{"joint", r.joint}, {"predicate", pred}, {"message", r.message}});
  }
  j["rules"] = std::move(rules);
  j["scores"] = {{"flag_threshold", c.scores.flag_threshold},
                 {"deviation_scale_deg", c.scores.deviation_scale_deg},
                 {"pace_ratio_weight", c.scores.pace_ratio_weight},
                 {"pace_warp_weight", c.scores.pace_warp_weight},
                 {"arrow_min_px", c.scores.arrow_min_px},
                 {"range_smoothing_window", c.scores.range_smoothing_window}};
  return j;
}

inline ExerciseConfig load_config(const std::filesystem::path& path) {
  return config_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

// --- reports -----------------------------------------------------------------

// The "/" sentinel marks a range score that does not apply to the exercise.
inline constexpr const char* kNotApplicable = "/";

inline Json to_json(const AssessmentReport& r) {
  Json j;
  j["name"] = r.name;
  j["class"] = std::string(to_string(r.region));
  j["joint"] = r.joint_score;
  j["pace"] = r.pace_score;
  j["range"] = r.range_score ? Json(*r.range_score) : Json(kNotApplicable);
  Json corr = Json::array();
  for (const Correction& c : r.corrections) {
    corr.push_back({{"text", c.text}, {"joint", std::string(name(c.joint))}, {"frames", c.key_frames}});
  }
  j["correction"] = std::move(corr);
  return j;
}

// Evidence behind a report row: alignment, per-frame deviations, flags, pace
// breakdown, ROM violations, normalization transforms and model scores.
inline Json detail_to_json(const AssessmentReport& r) {
  Json d;
  d["targeted_joints"] = detail::joint_list_json(r.targeted_joints);
  Json frames = Json::array();
  for (const FrameDetail& f : r.frame_detail) {
    Json joints = Json::array();
    for (const JointDeviation& jd : f.joints) {
      joints.push_back({{"joint", std::string(name(jd.joint))},
                        {"deviation", jd.deviation},
                        {"candidate_angle", detail::optional_number(jd.candidate_angle)},
                        {"reference_angle", detail::optional_number(jd.reference_angle)}});
    }
    frames.push_back({{"candidate_index", f.candidate_index},
                      {"reference_index", f.reference_index},
                      {"candidate_frame", f.candidate_frame},
                      {"reference_frame", f.reference_frame},
                      {"phase", f.phase},
                      {"joints", std::move(joints)}});
  }
  d["frames"] = std::move(frames);
  Json flags = Json::array();
  for (const MistakeFlag& f : r.flags) {
    flags.push_back({{"detail_index", f.detail_index},
                     {"frame", f.frame_id},
                     {"joint", std::string(name(f.joint))},
                     {"deviation", f.deviation},
                     {"candidate_angle", detail::optional_number(f.candidate_angle)},
                     {"phase", f.phase}});
  }
  d["flags"] = std::move(flags);
  Json phases = Json::array();
  for (const PhaseDuration& p : r.pace.phases) {
    phases.push_back({{"name", p.name},
                      {"candidate_seconds", p.candidate_seconds},
                      {"reference_seconds", p.reference_seconds},
                      {"candidate_begin", p.candidate_begin},
                      {"candidate_end", p.candidate_end}});
  }
  d["pace"] = {{"duration_ratio", r.pace.duration_ratio},
               {"warp_deviation", r.pace.warp_deviation},
               {"phases", std::move(phases)},
               {"fast_eccentric", r.pace.fast_eccentric}};
  Json rom = Json::array();
  for (const RomViolation& v : r.rom_violations) {
    rom.push_back({{"frame", v.frame_id}, {"joint", std::string(name(v.joint))}, {"angle", v.angle_deg}});
  }
  d["rom_violations"] = std::move(rom);
  Json xf = Json::array();
  for (const FrameTransform& t : r.transforms) {
    xf.push_back({{"frame", t.frame_id},
                  {"theta", t.transform.theta},
                  {"dx", t.transform.offset.x},
                  {"dy", t.transform.offset.y},
                  {"s", t.transform.scale},
                  {"cx", t.transform.center.x},
                  {"cy", t.transform.center.y}});
  }
  d["transforms"] = std::move(xf);
  if (r.model) {
    d["model"] = {{"joint", r.model->joint},
                  {"pace", r.model->pace},
                  {"range", r.model->range},
                  {"mistake_frames", r.model->mistake_frames}};
  }
  return d;
}

// The row must carry exactly the six table columns; the detail document is
// optional.
inline AssessmentReport report_from_json(const Json& j, const Json* detail_doc = nullptr,
                                         const std::string& origin = "report") {
  if (!j.is_object()) throw ValidationError(origin + ": expected a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (key != "name" && key != "class" && key != "joint" && key != "pace" && key != "range" &&
        key != "correction") {
      throw ValidationError(origin + ": unexpected report column '" + key + "'");
    }
  }
  using detail::get_field;
  AssessmentReport r;
  try {
    r.name = get_field<std::string>(j, "name", origin);
    r.region = parse_body_region(get_field<std::string>(j, "class", origin));
    r.joint_score = get_field<double>(j, "joint", origin);
    r.pace_score = get_field<double>(j, "pace", origin);
    const Json& range = j.at("range");
    if (range.is_string()) {
      if (range.get<std::string>() != kNotApplicable) {
        throw ValidationError(origin + ": range must be a number or \"/\"");
      }
    } else {
      r.range_score = range.get<double>();
    }
    for (const Json& c : j.at("correction")) {
      r.corrections.push_back({c.at("text").get<std::string>(),
                               detail::joint_field(c.at("joint"), origin),
                               c.at("frames").get<std::vector<std::string>>()});
    }
    if (detail_doc) {
      const Json& d = *detail_doc;
      r.targeted_joints = detail::joint_group_list(d.at("targeted_joints"), origin);
      for (const Json& f : d.at("frames")) {
        FrameDetail fd;
        fd.candidate_index = f.at("candidate_index").get<std::size_t>();
        fd.reference_index = f.at("reference_index").get<std::size_t>();
        fd.candidate_frame = f.at("candidate_frame").get<std::string>();
        fd.reference_frame = f.at("reference_frame").get<std::string>();
        fd.phase = f.at("phase").get<std::string>();
        for (const Json& jd : f.at("joints")) {
          fd.joints.push_back({detail::joint_field(jd.at("joint"), origin),
                               jd.at("deviation").get<double>(),
                               detail::number_or_null(jd.at("candidate_angle")),
                               detail::number_or_null(jd.at("reference_angle"))});
        }
        r.frame_detail.push_back(std::move(fd));
      }
      for (const Json& f : d.at("flags")) {
        r.flags.push_back({f.at("detail_index").get<std::size_t>(), f.at("frame").get<std::string>(),
                           detail::joint_field(f.at("joint"), origin),
                           f.at("deviation").get<double>(),
                           detail::number_or_null(f.at("candidate_angle")),
                           f.at("phase").get<std::string>()});
      }
      const Json& p = d.at("pace");
      r.pace.duration_ratio = p.at("duration_ratio").get<double>();
      r.pace.warp_deviation = p.at("warp_deviation").get<double>();
      for (const Json& ph : p.at("phases")) {
        r.pace.phases.push_back({ph.at("name").get<std::string>(),
                                 ph.at("candidate_seconds").get<double>(),
                                 ph.at("reference_seconds").get<double>(),
                                 ph.at("candidate_begin").get<std::size_t>(),
                                 ph.at("candidate_end").get<std::size_t>()});
      }
      r.pace.fast_eccentric = p.at("fast_eccentric").get<std::vector<std::string>>();
      for (const Json& v : d.at("rom_violations")) {
        r.rom_violations.push_back({v.at("frame").get<std::string>(),
                                    detail::joint_field(v.at("joint"), origin),
                                    v.at("angle").get<double>()});
      }
      for (const Json& t : d.at("transforms")) {
        NormalizationTransform xf;
        xf.theta = t.at("theta").get<double>();
        xf.offset = {t.at("dx").get<double>(), t.at("dy").get<double>()};
        xf.scale = t.at("s").get<double>();
        xf.center = {t.at("cx").get<double>(), t.at("cy").get<double>()};
        r.transforms.push_back({t.at("frame").get<std::string>(), xf});
      }
      if (d.contains("model")) {
        const Json& m = d.at("model");
        r.model = ModelScores{m.at("joint").get<double>(), m.at("pace").get<double>(),
                              m.at("range").get<double>(),
                              m.at("mistake_frames").get<std::vector<std::string>>()};
      }
    }
  } catch (const Json::exception& e) {
    throw ValidationError(origin + ": malformed report: " + e.what());
  }
  validate(r);
  return r;
}

inline void save_report(const AssessmentReport& r, const std::filesystem::path& path) {
  validate(r);
  write_file_atomic(path, dump(to_json(r)));
}

inline void save_report_detail(const AssessmentReport& r, const std::filesystem::path& path) {
  write_file_atomic(path, dump(detail_to_json(r)));
}

inline AssessmentReport load_report(const std::filesystem::path& path,
                                    const std::filesystem::path& detail_path = {}) {
  const Json row = parse_json_text(read_text_file(path), path.string());
  if (detail_path.empty()) return report_from_json(row, nullptr, path.string());
  const Json d = parse_json_text(read_text_file(detail_path), detail_path.string());
  return report_from_json(row, &d, path.string());
}

}  // namespace posecoach
