#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedncf/config.hpp"
#include "fedncf/errors.hpp"
#include "fedncf/experiment.hpp"

namespace {

std::string join_columns(const std::vector<std::string>& columns) {
  std::string out;
  for (const std::string& c : columns) {
    if (!out.empty()) {
      out += ',';
    }
    out += c;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Federated neural collaborative filtering: trains GMF/MLP/NeuMF either "
      "centralized or across simulated clients that keep their user vectors "
      "private, with plain, weighted, per-item or masked aggregation."};

  std::string config_path;
  std::string dataset_path;
  std::string model_name;
  std::string strategy_name;
  std::string out_dir;
  std::string columns;
  std::string separator;
  int header_lines = 0;
  int clients = 0;
  int rounds = 0;
  int epochs = 0;
  int eval_every = 0;
  int eval_k = 0;
  int embedding_dim = 0;
  std::vector<int> layers;
  double lr = 0.0;
  int batch_size = 0;
  int local_epochs = 0;
  int negatives = 0;
  int min_interactions = 0;
  int eval_negatives = 0;
  int scale_bits = 0;
  int threads = 0;
  std::uint64_t seed = 0;
  bool cost_flag = false;
  bool centralized = false;
  bool verbose = false;

  app.add_option("--config", config_path,
                 "JSON config file; other flags override its values")
      ->check(CLI::ExistingFile);
  app.add_option("--dataset", dataset_path, "interaction file to train on");
  app.add_option("--model", model_name, "gmf, mlp or neumf")
      ->check(CLI::IsMember({"gmf", "mlp", "neumf"}));
  app.add_option("--strategy", strategy_name,
                 "simple, fedavg, mffedavg or mfsecavg")
      ->check(CLI::IsMember({"simple", "fedavg", "mffedavg", "mfsecavg"}));
  app.add_option("--clients", clients, "clients aggregated per round");
  app.add_option("--rounds", rounds, "global federated rounds");
  app.add_option("--seed", seed, "master seed; equal seeds reproduce runs byte for byte");
  app.add_option("--out", out_dir, "output directory for metrics.csv, summary.json, ...");
  app.add_flag("--cost-report", cost_flag, "print the per-round communication cost table");
  app.add_flag("--centralized", centralized, "train the non-federated baseline instead");

  app.add_option("--epochs", epochs, "centralized training epochs");
  app.add_option("--eval-every", eval_every, "evaluate every n rounds (0: only at the end)");
  app.add_option("--eval-k", eval_k, "cutoff for HR@k and NDCG@k");
  app.add_option("--embedding-dim", embedding_dim, "latent factors per user/item");
  app.add_option("--layers", layers, "perceptron tower widths, e.g. --layers 48 24 12 6");
  app.add_option("--lr", lr, "Adam learning rate");
  app.add_option("--batch-size", batch_size, "minibatch size");
  app.add_option("--local-epochs", local_epochs, "local passes per selected client");
  app.add_option("--negatives", negatives, "sampled negatives per positive");
  app.add_option("--min-interactions", min_interactions,
                 "drop users with fewer distinct items");
  app.add_option("--eval-negatives", eval_negatives,
                 "fixed candidate negatives per user");
  app.add_option("--scale-bits", scale_bits, "fixed-point fraction bits for masking");
  app.add_option("--threads", threads, "worker threads per aggregation round");
  app.add_option("--columns", columns,
                 "column layout of the dataset file, e.g. user,item,rating,timestamp");
  app.add_option("--separator", separator,
                 "field separator: tab, comma, space, semicolon or one literal character");
  app.add_option("--header-lines", header_lines, "lines to skip at the top of the file");
  app.add_flag("-v,--verbose", verbose, "log every round to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    fedncf::ExperimentConfig cfg;
    if (app.count("--config")) {
      cfg = fedncf::load_config_file(config_path);
    }
    if (app.count("--dataset")) {
      cfg.data.path = dataset_path;
    }
    if (app.count("--columns") || app.count("--separator") ||
        app.count("--header-lines")) {
      const std::string cols = app.count("--columns")
                                   ? columns
                                   : join_columns(cfg.data.schema.columns);
      const std::string sep = app.count("--separator")
                                  ? separator
                                  : std::string(1, cfg.data.schema.separator);
      const int hdr = app.count("--header-lines")
                          ? header_lines
                          : cfg.data.schema.header_lines;
      cfg.data.schema = fedncf::ColumnSchema::parse(cols, sep, hdr);
    }
    if (app.count("--model")) {
      cfg.model.kind = fedncf::model_kind_from_string(model_name);
    }
    if (app.count("--strategy")) {
      cfg.fed.strategy = fedncf::strategy_from_string(strategy_name);
    }
    if (app.count("--clients")) cfg.fed.clients_per_round = clients;
    if (app.count("--rounds")) cfg.fed.global_rounds = rounds;
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--out")) cfg.out_dir = out_dir;
    if (app.count("--cost-report")) cfg.cost_report = true;
    if (app.count("--centralized")) cfg.centralized = true;
    if (app.count("--epochs")) cfg.central.epochs = epochs;
    if (app.count("--eval-every")) {
      cfg.fed.eval_every = eval_every;
      cfg.central.eval_every = eval_every;
    }
    if (app.count("--eval-k")) {
      cfg.fed.eval_k = eval_k;
      cfg.central.eval_k = eval_k;
    }
    if (app.count("--embedding-dim")) cfg.model.embedding_dim = embedding_dim;
    if (app.count("--layers")) cfg.model.mlp_layers = layers;
    if (app.count("--lr")) {
      cfg.fed.fit.adam.lr = lr;
      cfg.central.fit.adam.lr = lr;
    }
    if (app.count("--batch-size")) {
      cfg.fed.fit.batch_size = batch_size;
      cfg.central.fit.batch_size = batch_size;
    }
    if (app.count("--local-epochs")) cfg.fed.fit.local_epochs = local_epochs;
    if (app.count("--negatives")) {
      cfg.fed.fit.negatives_per_positive = negatives;
      cfg.central.fit.negatives_per_positive = negatives;
    }
    if (app.count("--min-interactions")) cfg.data.min_interactions = min_interactions;
    if (app.count("--eval-negatives")) cfg.data.eval_negatives = eval_negatives;
    if (app.count("--scale-bits")) cfg.fed.scale_bits = scale_bits;
    if (app.count("--threads")) cfg.fed.threads = threads;

    fedncf::RoundCallback on_round;
    if (verbose) {
      on_round = [](const fedncf::RoundRecord& r) {
        if (r.evaluated()) {
          std::fprintf(stderr, "round %d  loss %.6f  hr %.4f  ndcg %.4f\n",
                       r.round, r.loss, r.hr, r.ndcg);
        } else {
          std::fprintf(stderr, "round %d  loss %.6f\n", r.round, r.loss);
        }
      };
    }

    const fedncf::ExperimentOutcome outcome =
        fedncf::run_experiment(cfg, on_round);
    if (cfg.cost_report) {
      std::fputs(fedncf::cost_report(outcome.result.rounds).c_str(), stdout);
    }
    std::printf("%s %s  users %d  items %d  hr@%d %.4f  ndcg@%d %.4f  -> %s\n",
                cfg.centralized ? "centralized" : to_string(cfg.fed.strategy).c_str(),
                to_string(cfg.model.kind).c_str(), outcome.num_users,
                outcome.num_items,
                cfg.centralized ? cfg.central.eval_k : cfg.fed.eval_k,
                outcome.result.final_eval.hr,
                cfg.centralized ? cfg.central.eval_k : cfg.fed.eval_k,
                outcome.result.final_eval.ndcg, cfg.out_dir.c_str());
    return 0;
  } catch (const fedncf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const fedncf::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
