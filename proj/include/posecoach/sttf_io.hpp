// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoints (config + flat parameter vector as JSON), loss curves as CSV,
// and the training config file.

#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "posecoach/errors.hpp"
#include "posecoach/io.hpp"
#include "posecoach/sttf.hpp"

namespace posecoach::sttf {

inline constexpr const char* kCheckpointFormat = "posecoach-sttf";
inline constexpr int kCheckpointVersion = 1;

inline Json to_json(const STTFConfig& c) {
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"spatial_layers", c.spatial_layers},
          {"temporal_layers", c.temporal_layers},
          {"seq_len", c.seq_len},
          {"n_joints", c.n_joints},
          {"seed", c.seed}};
}

// Missing keys keep their defaults.
inline STTFConfig config_from_json(const Json& j, const std::string& origin) {
  STTFConfig c;
  try {
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.spatial_layers = j.value("spatial_layers", c.spatial_layers);
    c.temporal_layers = j.value("temporal_layers", c.temporal_layers);
    c.seq_len = j.value("seq_len", c.seq_len);
    c.n_joints = j.value("n_joints", c.n_joints);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ValidationError(origin + ": bad model config: " + e.what());
  }
  validate(c);
  return c;
}

inline Json to_json(const TrainOptions& o) {
  return {{"epochs", o.epochs},
          {"lr", o.lr},
          {"batch_size", o.batch_size},
          {"seed", o.seed},
          {"target_loss", o.target_loss}};
}

inline TrainOptions train_options_from_json(const Json& j, const std::string& origin) {
  TrainOptions o;
  try {
    o.epochs = j.value("epochs", o.epochs);
    o.lr = j.value("lr", o.lr);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.seed = j.value("seed", o.seed);
    o.target_loss = j.value("target_loss", o.target_loss);
  } catch (const Json::exception& e) {
    throw ValidationError(origin + ": bad training options: " + e.what());
  }
  if (!(o.lr >= 0.0)) throw ValidationError(origin + ": lr must be >= 0");
  if (o.batch_size == 0) throw ValidationError(origin + ": batch_size must be positive");
  return o;
}

struct TrainConfig {
  STTFConfig model;
  TrainOptions train;
};

// {"model": {...}, "train": {...}}; either section may be omitted.
inline TrainConfig load_train_config(const std::filesystem::path& path) {
  const Json j = parse_json_text(read_text_file(path), path.string());
  if (!j.is_object()) throw ValidationError(path.string() + ": expected a JSON object");
  TrainConfig c;
  c.model = config_from_json(j.value("model", Json::object()), path.string());
  c.train = train_options_from_json(j.value("train", Json::object()), path.string());
  return c;
}

inline Json checkpoint_json(const STTFModel& m) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", to_json(m.config)},
          {"params", m.params}};
}

inline STTFModel model_from_json(const Json& j, const std::string& origin) {
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    throw ValidationError(origin + ": not a model checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ValidationError(origin + ": unsupported checkpoint version");
  }
  STTFModel m = init_model(config_from_json(j.at("config"), origin));
  std::vector<double> params;
  try {
    params = j.at("params").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ValidationError(origin + ": bad parameter vector: " + e.what());
  }
  if (params.size() != m.params.size()) {
    throw ValidationError(origin + ": checkpoint has " + std::to_string(params.size()) +
                          " parameters, config implies " + std::to_string(m.params.size()));
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw ValidationError(origin + ": non-finite parameter");
  }
  m.params = std::move(params);
  return m;
}

inline void save_checkpoint(const STTFModel& m, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_json(m).dump() + "\n");
}

inline STTFModel load_checkpoint(const std::filesystem::path& path) {
  return model_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

inline std::string loss_csv(const std::vector<double>& curve) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, curve[i]);
    out += buf;
  }
  return out;
}

}  // namespace posecoach::sttf
