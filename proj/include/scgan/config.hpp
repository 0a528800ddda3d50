#pragma once

#include <string>

#include "json.hpp"
#include "scgan/train.hpp"

namespace scgan {

// Parses the experiment config document:
//   { "dataset": {...}, "model": {...}, "objective": {...}, "sc": {...},
//     "optimizer": {...}, "run": {...} }
// Unknown keys anywhere raise ConfigError naming the offending key.
TrainConfig parse_train_config(const nlohmann::json& doc);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

nlohmann::json load_config_file(const std::string& path);

// Applies a `section.key=value` override; value is parsed as a JSON literal
// (falls back to a string). Unknown paths surface later in parsing.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Experiment manifest: the resolved config snapshot plus its content hash.
// Written into the output directory before the first training step.
struct ExperimentManifest {
  nlohmann::json resolved;
  std::string hash;

  static ExperimentManifest from_config(const TrainConfig& cfg);
  void write(const std::string& path) const;
};

}  // namespace scgan
