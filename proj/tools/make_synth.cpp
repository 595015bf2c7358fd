#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "fedncf/errors.hpp"
#include "fedncf/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Writes a deterministic implicit-feedback corpus with planted low-rank "
      "structure, as user<TAB>item<TAB>rating<TAB>timestamp lines."};

  fedncf::SyntheticSpec spec;
  std::string out_path = "synthetic.tsv";
  app.add_option("--out", out_path, "output TSV path");
  app.add_option("--users", spec.num_users, "number of users");
  app.add_option("--items", spec.num_items, "number of items");
  app.add_option("--interactions", spec.target_interactions,
                 "total interactions aimed for in expectation");
  app.add_option("--latent-dim", spec.latent_dim, "rank of the planted structure");
  app.add_option("--taste", spec.taste_scale, "strength of the per-user preference signal");
  app.add_option("--recency", spec.recency_bias,
                 "tilt of timestamp order toward rare items arriving last");
  app.add_option("--popularity", spec.popularity_scale,
                 "strength of the shared popularity signal");
  app.add_option("--min-per-user", spec.min_per_user, "minimum interactions per user");
  app.add_option("--seed", spec.seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    fedncf::write_synthetic_tsv(out_path, spec);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
  } catch (const fedncf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
