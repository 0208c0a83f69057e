// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// posecoach: assess recorded exercise keypoints against a reference, generate
// synthetic recordings, and train / apply the transformer scorer.
//
// Exit codes: 0 ok, 1 I/O or unexpected failure, 2 invalid input,
// 3 degenerate data, 4 training diverged.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "posecoach/posecoach.hpp"

namespace fs = std::filesystem;
using namespace posecoach;

namespace {

enum ExitCode : int { kOk = 0, kIo = 1, kInvalid = 2, kDegenerate = 3, kDiverged = 4 };

// Runs fn and maps library exceptions to exit codes, prefixing messages with
// the item being processed.
template <class Fn>
int guarded(const std::string& context, Fn&& fn) {
  try {
    fn();
    return kOk;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << context << ": " << e.what() << "\n";
    return kInvalid;
  } catch (const DegenerateError& e) {
    std::cerr << "error: " << context << ": degenerate input: " << e.what() << "\n";
    return kDegenerate;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << context << ": " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << context << ": " << e.what() << "\n";
    return kIo;
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "'");
}

// Canvas large enough for the skeleton with a margin.
std::pair<int, int> canvas_size(const Frame& f) {
  double w = 640.0, h = 480.0;
  for (const Vec2& p : f.points) {
    w = std::max(w, p.x + 40.0);
    h = std::max(h, p.y + 40.0);
  }
  return {static_cast<int>(std::ceil(w)), static_cast<int>(std::ceil(h))};
}

std::string stem_of(const fs::path& p) {
  std::string s = p.filename().string();
  for (const char* ext : {".json"}) {
    const std::string e(ext);
    if (s.size() > e.size() && s.compare(s.size() - e.size(), e.size(), e) == 0) {
      s.resize(s.size() - e.size());
    }
  }
  return s;
}

Json arrow_json(const Arrow& a) {
  return {{"joint", std::string(name(a.joint))},
          {"from", {a.from.x, a.from.y}},
          {"to", {a.to.x, a.to.y}}};
}

struct AssessArgs {
  std::vector<std::string> candidates;
  std::string reference;
  std::string config;
  std::string out;
  std::string format = "json";
  std::string aux_model;
  unsigned jobs = 1;
};

void assess_one(const fs::path& cand_path, const Sequence& ref, const ExerciseConfig& config,
                const std::optional<sttf::STTFModel>& model, const fs::path& out, std::mutex& io) {
  const Sequence cand = load_sequence(cand_path);
  AssessmentResult res = assess(cand, ref, config);
  if (model) res.report.model = sttf::score_sequence(*model, cand, config.occlusion_threshold);

  const std::string stem = stem_of(cand_path);
  Json index = Json::array();
  for (const VisualAid& aid : res.aids) {
    const auto it = std::find_if(cand.frames.begin(), cand.frames.end(),
                                 [&](const Frame& f) { return f.id == aid.frame_id; });
    const auto [w, h] = canvas_size(*it);
    const std::string file = stem + "_" + aid.frame_id + "_aid.svg";
    write_file_atomic(out / file, render_svg(aid, *it, w, h, config.occlusion_threshold));
    Json arrows = Json::array();
    for (const Arrow& a : aid.arrows) arrows.push_back(arrow_json(a));
    Json skipped = Json::array();
    for (JointId j : aid.skipped) skipped.push_back(std::string(name(j)));
    index.push_back({{"frame", aid.frame_id},
                     {"file", file},
                     {"caption", aid.caption},
                     {"arrows", arrows},
                     {"skipped", skipped}});
  }
  write_file_atomic(out / (stem + ".aids.json"), dump(index));
  save_report_detail(res.report, out / (stem + ".detail.json"));
  save_report(res.report, out / (stem + ".report.json"));

  const AssessmentReport& r = res.report;
  std::lock_guard<std::mutex> lock(io);
  std::cout << r.name << "  joint " << r.joint_score << "  pace " << r.pace_score << "  range ";
  if (r.range_score) {
    std::cout << *r.range_score;
  } else {
    std::cout << kNotApplicable;
  }
  std::cout << "  flags " << r.flags.size() << "  aids " << res.aids.size() << "\n";
}

int cmd_assess(const AssessArgs& a) {
  if (a.format != "json") {
    std::cerr << "error: unsupported format '" << a.format << "'\n";
    return kInvalid;
  }
  ExerciseConfig config;
  Sequence ref;
  std::optional<sttf::STTFModel> model;
  if (int rc = guarded(a.config, [&] { config = load_config(a.config); })) return rc;
  if (int rc = guarded(a.reference, [&] { ref = load_sequence(a.reference); })) return rc;
  if (!a.aux_model.empty()) {
    if (int rc = guarded(a.aux_model, [&] { model = sttf::load_checkpoint(a.aux_model); })) {
      return rc;
    }
  }
  if (int rc = guarded(a.out, [&] { ensure_dir(a.out); })) return rc;

  std::mutex io;
  std::vector<int> codes(a.candidates.size(), kOk);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < a.candidates.size();) {
      codes[i] = guarded(a.candidates[i], [&] {
        assess_one(a.candidates[i], ref, config, model, a.out, io);
      });
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(a.jobs, a.candidates.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  // First failing candidate, in command-line order, decides the exit code.
  for (int c : codes) {
    if (c != kOk) return c;
  }
  return kOk;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out) {
  return guarded(spec_path, [&] {
    const synth::MotionSpec spec = synth::load_motion_spec(spec_path);
    const synth::Generated g = synth::generate(spec, seed);
    ensure_dir(out);
    const std::string id = g.sequence.exercise_id;
    save_sequence(g.sequence, fs::path(out) / (id + ".json"));
    save_annotation(g.annotation, fs::path(out) / (id + ".annotation.json"));
    std::cout << "wrote " << id << ".json and " << id << ".annotation.json (" << g.sequence.size()
              << " frames)\n";
  });
}

int cmd_template_config(const std::string& tpl, const std::string& out) {
  return guarded(out, [&] {
    write_file_atomic(out, dump(to_json(synth::template_config(synth::parse_template(tpl)))));
  });
}

// Pairs <name>.json with <name>.annotation.json, sorted by name.
std::vector<sttf::Example> load_dataset(const fs::path& dir, const sttf::STTFConfig& c) {
  if (!fs::is_directory(dir)) throw ValidationError("dataset directory '" + dir.string() + "' not found");
  std::vector<fs::path> seqs;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string f = e.path().filename().string();
    const bool json = f.size() > 5 && f.compare(f.size() - 5, 5, ".json") == 0;
    const bool ann = f.find(".annotation.json") != std::string::npos;
    if (e.is_regular_file() && json && !ann) seqs.push_back(e.path());
  }
  std::sort(seqs.begin(), seqs.end());
  std::vector<sttf::Example> out;
  for (const fs::path& p : seqs) {
    fs::path ann = dir / (stem_of(p) + ".annotation.json");
    if (!fs::exists(ann)) continue;
    const Sequence s = load_sequence(p);
    const Annotation a = load_annotation(ann);
    out.push_back({sttf::make_input(s, c), sttf::make_target(s, a, c)});
  }
  if (out.empty()) {
    throw ValidationError("dataset '" + dir.string() + "' has no sequence/annotation pairs");
  }
  return out;
}

struct TrainArgs {
  std::string dataset;
  std::string config;
  std::string out;
  std::string loss_csv;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
};

int cmd_train(const TrainArgs& a) {
  sttf::TrainConfig tc;
  if (!a.config.empty()) {
    if (int rc = guarded(a.config, [&] { tc = sttf::load_train_config(a.config); })) return rc;
  }
  if (a.seed) {
    tc.model.seed = *a.seed;
    tc.train.seed = *a.seed;
  }
  if (a.epochs) tc.train.epochs = *a.epochs;
  if (a.lr) tc.train.lr = *a.lr;

  return guarded(a.dataset, [&] {
    const auto data = load_dataset(a.dataset, tc.model);
    sttf::STTFModel m = sttf::init_model(tc.model);
    const auto res = sttf::train(m, data, tc.train, [](std::size_t epoch, double loss) {
      std::cout << "epoch " << epoch << " loss " << loss << "\n";
    });
    sttf::save_checkpoint(m, a.out);
    fs::path csv = a.loss_csv;
    if (csv.empty()) csv = fs::path(a.out).replace_extension(".loss.csv");
    write_file_atomic(csv, sttf::loss_csv(res.loss_curve));
  });
}

int cmd_score_model(const std::string& ckpt, const std::string& cand, const std::string& report,
                    const std::string& out) {
  sttf::STTFModel m;
  if (int rc = guarded(ckpt, [&] { m = sttf::load_checkpoint(ckpt); })) return rc;
  return guarded(cand, [&] {
    const ModelScores s = sttf::score_sequence(m, load_sequence(cand));
    if (!report.empty()) {
      // The model column lives in the report's detail document.
      fs::path detail = report;
      detail.replace_extension();
      detail.replace_extension(".detail.json");
      AssessmentReport r = fs::exists(detail) ? load_report(report, detail) : load_report(report);
      r.model = s;
      save_report_detail(r, out.empty() ? detail : fs::path(out));
      return;
    }
    const Json j = {{"joint", s.joint},
                    {"pace", s.pace},
                    {"range", s.range},
                    {"mistake_frames", s.mistake_frames}};
    if (out.empty()) {
      std::cout << dump(j);
    } else {
      write_file_atomic(out, dump(j));
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exercise assessment from 2D keypoint sequences"};
  app.require_subcommand(1);

  AssessArgs aa;
  auto* assess_cmd = app.add_subcommand("assess", "Score candidates against a reference");
  assess_cmd->add_option("--candidate", aa.candidates, "Candidate sequence (repeatable)")
      ->required();
  assess_cmd->add_option("--reference", aa.reference, "Reference sequence")->required();
  assess_cmd->add_option("--config", aa.config, "Exercise config")->required();
  assess_cmd->add_option("--out", aa.out, "Output directory")->required();
  assess_cmd->add_option("--format", aa.format, "Report format")->check(CLI::IsMember({"json"}));
  assess_cmd->add_option("--aux-model", aa.aux_model, "Transformer checkpoint for extra scores");
  assess_cmd->add_option("--jobs", aa.jobs, "Parallel candidates")->check(CLI::PositiveNumber);

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic recording");
  synth_cmd->add_option("--spec", spec_path, "Motion spec")->required();
  synth_cmd->add_option("--seed", synth_seed, "Noise seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  std::string tpl_name, tpl_out;
  auto* tpl_cmd = app.add_subcommand("template-config", "Write the exercise config of a template");
  tpl_cmd->add_option("--template", tpl_name, "squat, press or pull")->required();
  tpl_cmd->add_option("--out", tpl_out, "Output file")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the transformer scorer");
  train_cmd->add_option("--dataset", ta.dataset, "Directory of sequence/annotation pairs")
      ->required();
  train_cmd->add_option("--config", ta.config, "Training config");
  train_cmd->add_option("--out", ta.out, "Checkpoint file")->required();
  train_cmd->add_option("--loss-csv", ta.loss_csv, "Loss curve (default: next to checkpoint)");
  train_cmd->add_option("--seed", ta.seed, "Seed for initialization and shuffling");
  train_cmd->add_option("--epochs", ta.epochs, "Override epochs");
  train_cmd->add_option("--lr", ta.lr, "Override learning rate");

  std::string sm_ckpt, sm_cand, sm_report, sm_out;
  auto* score_cmd = app.add_subcommand("score-model", "Score one sequence with a checkpoint");
  score_cmd->add_option("--aux-model", sm_ckpt, "Checkpoint")->required();
  score_cmd->add_option("--candidate", sm_cand, "Sequence")->required();
  score_cmd->add_option("--report", sm_report, "Report whose detail document gets the model column");
  score_cmd->add_option("--out", sm_out, "Output file (default: stdout, or the detail document in place)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  if (*assess_cmd) return cmd_assess(aa);
  if (*synth_cmd) return cmd_synth(spec_path, synth_seed, synth_out);
  if (*tpl_cmd) return cmd_template_config(tpl_name, tpl_out);
  if (*train_cmd) return cmd_train(ta);
  if (*score_cmd) return cmd_score_model(sm_ckpt, sm_cand, sm_report, sm_out);
  return kInvalid;
}
