#pragma once

#include <cstdint>
#include <string>

#include "fedncf/dataset.hpp"
#include "fedncf/fedsim.hpp"
#include "fedncf/model.hpp"

namespace fedncf {

struct DataConfig {
  std::string path;
  ColumnSchema schema;
  int min_interactions = 5;
  int eval_negatives = 100;
};

struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;  // num_items is filled in after the dataset loads
  FedOptions fed;
  CentralOptions central;
  bool centralized = false;
  bool cost_report = false;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
};

/// Loads a JSON config file. Unknown keys, wrong types, or unreadable files
/// raise ConfigError. Keys not present keep their defaults, so a config file
/// can be sparse and the command line can override it afterwards.
ExperimentConfig load_config_file(const std::string& path);

/// Range-checks the assembled config (positive dims, known enum values,
/// batch size > 0, ...). Raises ConfigError with the offending key.
void validate(const ExperimentConfig& config);

}  // namespace fedncf
