#include "fedncf/config.hpp"

#include <fstream>

#include <json.hpp>

#include "fedncf/errors.hpp"

namespace fedncf {

namespace {

using nlohmann::json;

void expect_keys(const json& obj, const char* section,
                 std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError(std::string("unknown config key '") + section + "." +
                        key + "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* section, const char* key, T& dst) {
  if (!obj.contains(key)) {
    return;
  }
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + section + "." + key +
                      "' has the wrong type");
  }
}

void read_fit(const json& obj, FitOptions& fit) {
  expect_keys(obj, "train",
              {"local_epochs", "negatives_per_positive", "batch_size", "lr",
               "beta1", "beta2", "eps"});
  read_field(obj, "train", "local_epochs", fit.local_epochs);
  read_field(obj, "train", "negatives_per_positive",
             fit.negatives_per_positive);
  read_field(obj, "train", "batch_size", fit.batch_size);
  read_field(obj, "train", "lr", fit.adam.lr);
  read_field(obj, "train", "beta1", fit.adam.beta1);
  read_field(obj, "train", "beta2", fit.adam.beta2);
  read_field(obj, "train", "eps", fit.adam.eps);
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config file '" + path + "': top level must be an object");
  }

  ExperimentConfig cfg;
  expect_keys(root, "",
              {"data", "model", "train", "fed", "central", "centralized",
               "cost_report", "seed", "out_dir"});

  if (root.contains("data")) {
    const json& d = root.at("data");
    expect_keys(d, "data",
                {"path", "columns", "separator", "header_lines",
                 "min_interactions", "eval_negatives"});
    read_field(d, "data", "path", cfg.data.path);
    std::string columns = "user,item,rating,timestamp";
    std::string separator = "tab";
    int header_lines = 0;
    read_field(d, "data", "columns", columns);
    read_field(d, "data", "separator", separator);
    read_field(d, "data", "header_lines", header_lines);
    cfg.data.schema = ColumnSchema::parse(columns, separator, header_lines);
    read_field(d, "data", "min_interactions", cfg.data.min_interactions);
    read_field(d, "data", "eval_negatives", cfg.data.eval_negatives);
  }

  if (root.contains("model")) {
    const json& m = root.at("model");
    expect_keys(m, "model", {"kind", "embedding_dim", "mlp_layers"});
    std::string kind = to_string(cfg.model.kind);
    read_field(m, "model", "kind", kind);
    cfg.model.kind = model_kind_from_string(kind);
    read_field(m, "model", "embedding_dim", cfg.model.embedding_dim);
    read_field(m, "model", "mlp_layers", cfg.model.mlp_layers);
  }

  if (root.contains("train")) {
    read_fit(root.at("train"), cfg.fed.fit);
    cfg.central.fit = cfg.fed.fit;
  }

  if (root.contains("fed")) {
    const json& f = root.at("fed");
    expect_keys(f, "fed",
                {"strategy", "clients_per_round", "global_rounds",
                 "eval_every", "eval_k", "scale_bits", "threads"});
    std::string strategy = to_string(cfg.fed.strategy);
    read_field(f, "fed", "strategy", strategy);
    cfg.fed.strategy = strategy_from_string(strategy);
    read_field(f, "fed", "clients_per_round", cfg.fed.clients_per_round);
    read_field(f, "fed", "global_rounds", cfg.fed.global_rounds);
    read_field(f, "fed", "eval_every", cfg.fed.eval_every);
    read_field(f, "fed", "eval_k", cfg.fed.eval_k);
    read_field(f, "fed", "scale_bits", cfg.fed.scale_bits);
    read_field(f, "fed", "threads", cfg.fed.threads);
  }

  if (root.contains("central")) {
    const json& c = root.at("central");
    expect_keys(c, "central", {"epochs", "eval_every", "eval_k"});
    read_field(c, "central", "epochs", cfg.central.epochs);
    read_field(c, "central", "eval_every", cfg.central.eval_every);
    read_field(c, "central", "eval_k", cfg.central.eval_k);
  }

  read_field(root, "", "centralized", cfg.centralized);
  read_field(root, "", "cost_report", cfg.cost_report);
  read_field(root, "", "seed", cfg.seed);
  read_field(root, "", "out_dir", cfg.out_dir);
  return cfg;
}

void validate(const ExperimentConfig& config) {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw ConfigError(what);
    }
  };
  require(!config.data.path.empty(), "data.path is required");
  require(config.data.min_interactions >= 1, "data.min_interactions must be >= 1");
  require(config.data.eval_negatives >= 1, "data.eval_negatives must be >= 1");
  require(config.model.embedding_dim >= 1, "model.embedding_dim must be >= 1");
  for (int h : config.model.mlp_layers) {
    require(h >= 1, "model.mlp_layers widths must be >= 1");
  }

  const FitOptions& fit = config.centralized ? config.central.fit : config.fed.fit;
  require(fit.local_epochs >= 0, "train.local_epochs must be >= 0");
  require(fit.negatives_per_positive >= 0,
          "train.negatives_per_positive must be >= 0");
  require(fit.batch_size >= 1, "train.batch_size must be >= 1");
  require(fit.adam.lr > 0.0, "train.lr must be > 0");
  require(fit.adam.beta1 >= 0.0 && fit.adam.beta1 < 1.0,
          "train.beta1 must be in [0, 1)");
  require(fit.adam.beta2 >= 0.0 && fit.adam.beta2 < 1.0,
          "train.beta2 must be in [0, 1)");
  require(fit.adam.eps > 0.0, "train.eps must be > 0");

  if (config.centralized) {
    require(config.central.epochs >= 1, "central.epochs must be >= 1");
    require(config.central.eval_k >= 1, "central.eval_k must be >= 1");
  } else {
    require(config.fed.clients_per_round >= 1,
            "fed.clients_per_round must be >= 1");
    require(config.fed.global_rounds >= 1, "fed.global_rounds must be >= 1");
    require(config.fed.eval_k >= 1, "fed.eval_k must be >= 1");
    require(config.fed.scale_bits >= 1 && config.fed.scale_bits <= 40,
            "fed.scale_bits must be in [1, 40]");
    require(config.fed.threads >= 1, "fed.threads must be >= 1");
  }
  require(!config.out_dir.empty(), "out_dir is required");
}

}  // namespace fedncf
