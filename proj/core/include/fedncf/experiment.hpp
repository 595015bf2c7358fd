#pragma once

#include <string>
#include <vector>

#include "fedncf/config.hpp"
#include "fedncf/fedsim.hpp"

namespace fedncf {

struct ExperimentOutcome {
  RunResult result;
  std::int32_t num_users = 0;
  std::int32_t num_items = 0;
  std::size_t num_interactions = 0;
  std::string metrics_csv;   // deterministic: identical bytes for equal seeds
  std::string summary_json;  // deterministic as well
  std::string timings_csv;   // wall times, excluded from determinism claims
};

/// Loads the dataset, runs the configured experiment and renders the output
/// files. Writes metrics.csv, summary.json, timings.csv and the id-map dump
/// under config.out_dir (created if missing).
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RoundCallback& on_round = {});

/// Rendering helpers, exposed so tests can compare bytes without touching the
/// filesystem. Numbers print via "%.17g" so doubles round-trip exactly.
std::string metrics_to_csv(const std::vector<RoundRecord>& rounds);
std::string timings_to_csv(const std::vector<RoundRecord>& rounds);
std::string summary_to_json(const ExperimentConfig& config,
                            const ExperimentOutcome& outcome);

/// Per-round and total upload/mask cost table for --cost-report, rendered
/// from the run log at 8 bytes per transmitted element.
std::string cost_report(const std::vector<RoundRecord>& rounds);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace fedncf
