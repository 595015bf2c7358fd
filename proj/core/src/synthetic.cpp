#include "fedncf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fedncf/errors.hpp"
#include "fedncf/matrix.hpp"

namespace fedncf {

namespace {

// Sub-stream labels under the corpus seed.
constexpr std::uint64_t kUserLatent = 1;
constexpr std::uint64_t kItemLatent = 2;
constexpr std::uint64_t kPopularity = 3;
constexpr std::uint64_t kCounts = 4;
constexpr std::uint64_t kSelection = 5;

double gumbel(Rng& rng) {
  const double u = std::max(rng.uniform(), 1e-300);
  return -std::log(-std::log(u));
}

}  // namespace

std::vector<RawInteraction> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_users <= 0 || spec.num_items <= 1 || spec.latent_dim <= 0) {
    throw ConfigError("synthetic corpus needs positive sizes");
  }
  const std::size_t d = static_cast<std::size_t>(spec.latent_dim);

  Matrix user_latent(spec.num_users, d);
  {
    Rng rng(derive_seed(spec.seed, kUserLatent));
    for (double& x : user_latent.data) {
      x = rng.normal(0.0, 1.0);
    }
  }
  Matrix item_latent(spec.num_items, d);
  {
    Rng rng(derive_seed(spec.seed, kItemLatent));
    for (double& x : item_latent.data) {
      x = rng.normal(0.0, 1.0);
    }
  }

  // Zipf-like popularity over a random item ranking.
  std::vector<double> popularity(spec.num_items);
  {
    std::vector<std::int32_t> rank(spec.num_items);
    std::iota(rank.begin(), rank.end(), 0);
    Rng rng(derive_seed(spec.seed, kPopularity));
    rng.shuffle(rank);
    for (std::int32_t i = 0; i < spec.num_items; ++i) {
      popularity[i] =
          spec.popularity_scale *
          -std::log((static_cast<double>(rank[i]) + 0.5) /
                    static_cast<double>(spec.num_items));
    }
  }

  // Interaction counts: a floor plus an exponential tail, aimed at the
  // requested total in expectation.
  std::vector<std::int32_t> counts(spec.num_users);
  {
    const double mean_extra = std::max(
        0.0, static_cast<double>(spec.target_interactions) /
                     static_cast<double>(spec.num_users) -
                 static_cast<double>(spec.min_per_user));
    const std::int32_t cap = std::max(spec.min_per_user + 1,
                                      spec.num_items / 3);
    Rng rng(derive_seed(spec.seed, kCounts));
    for (std::int32_t u = 0; u < spec.num_users; ++u) {
      const double extra = -mean_extra * std::log(1.0 - rng.uniform());
      counts[u] = std::min(cap, spec.min_per_user +
                                    static_cast<std::int32_t>(extra));
    }
  }

  std::vector<RawInteraction> out;
  out.reserve(static_cast<std::size_t>(spec.target_interactions) + 4096);
  const double taste = spec.taste_scale / std::sqrt(static_cast<double>(d));
  std::vector<std::pair<double, std::int32_t>> keyed(spec.num_items);
  std::vector<std::pair<double, std::int32_t>> order;
  std::vector<std::int32_t> chosen;
  for (std::int32_t u = 0; u < spec.num_users; ++u) {
    Rng rng(derive_seed(spec.seed, kSelection, static_cast<std::uint64_t>(u)));
    const double* pu = user_latent.row(u);
    for (std::int32_t i = 0; i < spec.num_items; ++i) {
      const double* qi = item_latent.row(i);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        dot += pu[c] * qi[c];
      }
      // Gumbel-top-k: equivalent to sampling without replacement from the
      // softmax of the logits.
      keyed[i] = {taste * dot + popularity[i] + gumbel(rng), i};
    }
    const std::int32_t n = std::min<std::int32_t>(counts[u], spec.num_items);
    std::nth_element(keyed.begin(), keyed.begin() + (n - 1), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    chosen.clear();
    for (std::int32_t i = 0; i < n; ++i) {
      chosen.push_back(keyed[i].second);
    }
    std::sort(chosen.begin(), chosen.end());
    // Timestamp order is random with an optional tilt: under a positive
    // recency_bias rare items tend to arrive later, so the held-out latest
    // interaction leans toward the catalog tail the way late-added items do
    // in real rating logs.
    order.resize(chosen.size());
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      order[k] = {gumbel(rng) - spec.recency_bias * popularity[chosen[k]],
                  chosen[k]};
    }
    std::sort(order.begin(), order.end());
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      chosen[k] = order[k].second;
    }
    for (std::int32_t pos = 0; pos < n; ++pos) {
      RawInteraction rec;
      rec.user_key = "u" + std::to_string(u);
      rec.item_key = "i" + std::to_string(chosen[pos]);
      rec.rating = 1.0;
      rec.timestamp = 1000000000 + pos;
      rec.line_number = out.size() + 1;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void write_synthetic_tsv(const std::string& path, const SyntheticSpec& spec) {
  std::ofstream file(path);
  if (!file) {
    throw RunError("cannot write '" + path + "'");
  }
  for (const RawInteraction& rec : generate_synthetic(spec)) {
    file << rec.user_key << '\t' << rec.item_key << '\t' << *rec.rating << '\t'
         << *rec.timestamp << '\n';
  }
}

}  // namespace fedncf
