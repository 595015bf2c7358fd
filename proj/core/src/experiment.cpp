#include "fedncf/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fedncf/dataset.hpp"
#include "fedncf/errors.hpp"

namespace fedncf {

namespace {

/// Shortest exact decimal form: %.17g always round-trips a double, so equal
/// values render as equal bytes.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_to_csv(const std::vector<RoundRecord>& rounds) {
  std::string out = "round,loss,hr,ndcg,uploaded_elements,masked_elements\n";
  for (const RoundRecord& r : rounds) {
    out += std::to_string(r.round);
    out += ',';
    out += fmt(r.loss);
    out += ',';
    if (r.evaluated()) {
      out += fmt(r.hr);
      out += ',';
      out += fmt(r.ndcg);
    } else {
      out += ',';
    }
    out += ',';
    out += std::to_string(r.uploaded_elements);
    out += ',';
    out += std::to_string(r.masked_elements);
    out += '\n';
  }
  return out;
}

std::string timings_to_csv(const std::vector<RoundRecord>& rounds) {
  std::string out = "round,seconds\n";
  for (const RoundRecord& r : rounds) {
    out += std::to_string(r.round);
    out += ',';
    out += fmt_seconds(r.seconds);
    out += '\n';
  }
  return out;
}

std::string summary_to_json(const ExperimentConfig& config,
                            const ExperimentOutcome& outcome) {
  nlohmann::ordered_json j;
  j["mode"] = config.centralized ? "centralized" : "federated";
  j["model"] = to_string(config.model.kind);
  j["embedding_dim"] = config.model.embedding_dim;
  j["mlp_layers"] = config.model.mlp_layers;
  j["seed"] = config.seed;
  j["dataset"] = {
      {"path", config.data.path},
      {"users", outcome.num_users},
      {"items", outcome.num_items},
      {"interactions", outcome.num_interactions},
      {"min_interactions", config.data.min_interactions},
      {"eval_negatives", config.data.eval_negatives},
  };
  if (config.centralized) {
    j["epochs"] = config.central.epochs;
    j["eval_k"] = config.central.eval_k;
  } else {
    j["strategy"] = to_string(config.fed.strategy);
    j["clients_per_round"] = config.fed.clients_per_round;
    j["global_rounds"] = config.fed.global_rounds;
    j["eval_k"] = config.fed.eval_k;
    if (config.fed.strategy == Strategy::kMfSecAvg) {
      j["scale_bits"] = config.fed.scale_bits;
    }
  }

  std::uint64_t uploaded = 0;
  std::uint64_t masked = 0;
  for (const RoundRecord& r : outcome.result.rounds) {
    uploaded += r.uploaded_elements;
    masked += r.masked_elements;
  }
  j["results"] = {
      {"hr", outcome.result.final_eval.hr},
      {"ndcg", outcome.result.final_eval.ndcg},
      {"final_loss", outcome.result.rounds.empty()
                         ? 0.0
                         : outcome.result.rounds.back().loss},
      {"uploaded_elements", uploaded},
      {"uploaded_bytes", uploaded * 8},  // 8 bytes per element on the wire
      {"masked_elements", masked},
  };
  return j.dump(2) + "\n";
}

std::string cost_report(const std::vector<RoundRecord>& rounds) {
  std::string out = "round  uploaded_elements  uploaded_bytes  masked_elements\n";
  std::uint64_t uploaded = 0;
  std::uint64_t masked = 0;
  char buf[128];
  for (const RoundRecord& r : rounds) {
    uploaded += r.uploaded_elements;
    masked += r.masked_elements;
    std::snprintf(buf, sizeof(buf), "%-6d %18llu %15llu %16llu\n", r.round,
                  static_cast<unsigned long long>(r.uploaded_elements),
                  static_cast<unsigned long long>(r.uploaded_elements * 8),
                  static_cast<unsigned long long>(r.masked_elements));
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "total  %18llu %15llu %16llu\n",
                static_cast<unsigned long long>(uploaded),
                static_cast<unsigned long long>(uploaded * 8),
                static_cast<unsigned long long>(masked));
  out += buf;
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RunError("cannot write '" + path + "'");
  }
  out << content;
  if (!out) {
    throw RunError("failed while writing '" + path + "'");
  }
}

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RoundCallback& on_round) {
  validate(config);

  const std::vector<RawInteraction> raw =
      load_interactions(config.data.path, config.data.schema);
  const Dataset data = binarize_and_filter(raw, config.data.min_interactions);
  const LooSplit split =
      leave_one_out_split(data, config.data.eval_negatives, config.seed);

  ModelConfig model = config.model;
  model.num_items = data.num_items;

  ExperimentOutcome outcome;
  outcome.num_users = data.num_users;
  outcome.num_items = data.num_items;
  outcome.num_interactions = data.interactions.size();
  outcome.result = config.centralized
                       ? run_centralized(split, model, config.central,
                                         config.seed, on_round)
                       : run_federated(split, model, config.fed, config.seed,
                                       on_round);

  outcome.metrics_csv = metrics_to_csv(outcome.result.rounds);
  outcome.timings_csv = timings_to_csv(outcome.result.rounds);
  outcome.summary_json = summary_to_json(config, outcome);

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    throw RunError("cannot create output directory '" + config.out_dir + "'");
  }
  const std::filesystem::path dir(config.out_dir);
  write_text_file((dir / "metrics.csv").string(), outcome.metrics_csv);
  write_text_file((dir / "timings.csv").string(), outcome.timings_csv);
  write_text_file((dir / "summary.json").string(), outcome.summary_json);
  dump_reindex_maps(data, (dir / "reindex").string());
  return outcome;
}

}  // namespace fedncf
