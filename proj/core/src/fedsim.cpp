#include "fedncf/fedsim.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <thread>

#include "fedncf/errors.hpp"
#include "fedncf/rng.hpp"
#include "fedncf/secagg.hpp"

namespace fedncf {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

bool is_eval_round(int round, int total, int eval_every) {
  if (round == total) {
    return true;
  }
  return eval_every > 0 && round % eval_every == 0;
}

/// Per-client upload size in elements, by strategy: the full parameter copy,
/// plus the instance count scalar for the weighted strategy, plus the
/// participation vector where the server needs per-item counts. The masked
/// strategy ships the whole ring payload.
std::uint64_t upload_elements(Strategy strategy, const ModelConfig& model) {
  const std::uint64_t base = transmitted_parameter_count(model);
  switch (strategy) {
    case Strategy::kSimple:
      return base;
    case Strategy::kFedAvg:
      return base + 1;
    case Strategy::kMfFedAvg:
      return base + static_cast<std::uint64_t>(model.num_items);
    case Strategy::kMfSecAvg:
      return payload_length(model);
  }
  return base;
}

}  // namespace

std::vector<std::vector<std::int32_t>> partition_clients(
    std::int32_t num_clients, int per_round, std::uint64_t round_seed) {
  if (num_clients <= 0 || per_round <= 0) {
    throw RunError("partition_clients: need positive counts");
  }
  std::vector<std::int32_t> ids(num_clients);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(round_seed);
  rng.shuffle(ids);

  std::vector<std::vector<std::int32_t>> groups;
  for (std::size_t start = 0; start < ids.size();
       start += static_cast<std::size_t>(per_round)) {
    const std::size_t stop =
        std::min(ids.size(), start + static_cast<std::size_t>(per_round));
    groups.emplace_back(ids.begin() + start, ids.begin() + stop);
  }
  return groups;
}

LocalUpdate client_update(const ModelParams& global_params, UserBank& users,
                          std::int32_t user,
                          const std::vector<std::int32_t>& positives,
                          std::int32_t num_items, const FitOptions& fit,
                          std::uint64_t seed, double* mean_loss) {
  Rng rng(seed);

  // Work on a private copy of the shared state; the server only ever sees
  // this copy, never the user vector.
  ModelParams local = global_params;
  AdamState adam(local);

  LocalUpdate update;
  update.client_id = user;
  update.touched.assign(static_cast<std::size_t>(num_items), 0);
  update.instance_count = static_cast<std::int64_t>(positives.size()) *
                          (1 + fit.negatives_per_positive);

  std::vector<BatchInstance> instances;
  std::vector<BatchInstance> batch;
  Gradients grads;
  double loss_sum = 0.0;
  std::int64_t batches = 0;
  for (int epoch = 0; epoch < fit.local_epochs; ++epoch) {
    instances.clear();
    for (std::int32_t item : positives) {
      instances.push_back({user, item, 1.0});
      update.touched[item] = 1;
    }
    const std::vector<std::int32_t> negatives = sample_train_negatives(
        positives, num_items,
        positives.size() * static_cast<std::size_t>(fit.negatives_per_positive),
        rng);
    for (std::int32_t item : negatives) {
      instances.push_back({user, item, 0.0});
      update.touched[item] = 1;
    }
    rng.shuffle(instances);

    for (std::size_t start = 0; start < instances.size();
         start += static_cast<std::size_t>(fit.batch_size)) {
      const std::size_t stop =
          std::min(instances.size(),
                   start + static_cast<std::size_t>(fit.batch_size));
      batch.assign(instances.begin() + start, instances.begin() + stop);
      loss_sum += forward_backward(local, users, batch, grads);
      adam.apply(fit.adam, grads, local, users);
      ++batches;
    }
  }
  if (mean_loss != nullptr) {
    *mean_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
  }

  update.item_gmf = std::move(local.item_gmf);
  update.item_mlp = std::move(local.item_mlp);
  update.network = std::move(local.network);
  return update;
}

RunResult run_federated(const LooSplit& split, const ModelConfig& model,
                        const FedOptions& opt, std::uint64_t seed,
                        const RoundCallback& on_round) {
  const std::int32_t num_users = split.train.num_users;
  const std::int32_t num_items = split.train.num_items;
  if (model.num_items != num_items) {
    throw RunError("model num_items does not match the dataset");
  }

  RunResult result;
  result.params = init_model(model, seed);
  result.users = init_users(model, num_users, seed);
  const auto positives = split.train.user_items();

  const std::uint64_t per_client_upload = upload_elements(opt.strategy, model);
  // Deliberately not clamped to the core count: oversubscribed threads still
  // must produce identical output, and tests rely on exercising that.
  const int threads = std::max(1, opt.threads);

  for (int round = 1; round <= opt.global_rounds; ++round) {
    const auto start = std::chrono::steady_clock::now();
    const auto groups = partition_clients(
        num_users, opt.clients_per_round,
        derive_seed(seed, seed_tag::kSelection,
                    static_cast<std::uint64_t>(round)));

    std::vector<double> loss_by_user(num_users, 0.0);
    std::uint64_t uploaded = 0;
    std::uint64_t masked = 0;

    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::vector<std::int32_t>& group = groups[g];
      std::vector<LocalUpdate> updates(group.size());

      auto run_client = [&](std::size_t slot) {
        const std::int32_t u = group[slot];
        updates[slot] = client_update(
            result.params, result.users, u, positives[u], num_items, opt.fit,
            derive_seed(seed, seed_tag::kLocalTrain,
                        static_cast<std::uint64_t>(u),
                        static_cast<std::uint64_t>(round)),
            &loss_by_user[u]);
      };

      if (threads <= 1 || group.size() <= 1) {
        for (std::size_t slot = 0; slot < group.size(); ++slot) {
          run_client(slot);
        }
      } else {
        // Clients touch disjoint user rows and only read the shared params,
        // so slots can run on any schedule without changing any result.
        std::vector<std::thread> pool;
        const int workers =
            std::min<int>(threads, static_cast<int>(group.size()));
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w]() {
            for (std::size_t slot = static_cast<std::size_t>(w);
                 slot < group.size();
                 slot += static_cast<std::size_t>(workers)) {
              run_client(slot);
            }
          });
        }
        for (std::thread& t : pool) {
          t.join();
        }
      }

      uploaded += per_client_upload * group.size();
      if (opt.strategy == Strategy::kMfSecAvg) {
        masked += count_masked_parameters(
                      model, static_cast<int>(group.size())) *
                  group.size();
        result.params = secure_round(
            result.params, updates,
            derive_seed(seed, seed_tag::kSeedExchange,
                        static_cast<std::uint64_t>(round),
                        static_cast<std::uint64_t>(g)),
            opt.scale_bits);
      } else {
        result.params = aggregate(opt.strategy, result.params, updates);
      }
    }

    RoundRecord rec;
    rec.round = round;
    double loss_sum = 0.0;
    for (std::int32_t u = 0; u < num_users; ++u) {
      loss_sum += loss_by_user[u];
    }
    rec.loss = loss_sum / static_cast<double>(num_users);
    rec.uploaded_elements = uploaded;
    rec.masked_elements = masked;
    if (is_eval_round(round, opt.global_rounds, opt.eval_every)) {
      const EvalResult ev =
          evaluate(result.params, result.users, split, opt.eval_k);
      rec.hr = ev.hr;
      rec.ndcg = ev.ndcg;
      result.final_eval = ev;
    }
    rec.seconds = seconds_since(start);
    result.rounds.push_back(rec);
    if (on_round) {
      on_round(rec);
    }
  }
  return result;
}

RunResult run_centralized(const LooSplit& split, const ModelConfig& model,
                          const CentralOptions& opt, std::uint64_t seed,
                          const RoundCallback& on_round) {
  const std::int32_t num_users = split.train.num_users;
  const std::int32_t num_items = split.train.num_items;
  if (model.num_items != num_items) {
    throw RunError("model num_items does not match the dataset");
  }

  RunResult result;
  result.params = init_model(model, seed);
  result.users = init_users(model, num_users, seed);
  AdamState adam(result.params);
  const auto positives = split.train.user_items();

  std::vector<BatchInstance> instances;
  std::vector<BatchInstance> batch;
  Gradients grads;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();

    instances.clear();
    Rng neg_rng(derive_seed(seed, seed_tag::kTrainNegatives,
                            static_cast<std::uint64_t>(epoch)));
    for (std::int32_t u = 0; u < num_users; ++u) {
      for (std::int32_t item : positives[u]) {
        instances.push_back({u, item, 1.0});
      }
      const std::vector<std::int32_t> negatives = sample_train_negatives(
          positives[u], num_items,
          positives[u].size() *
              static_cast<std::size_t>(opt.fit.negatives_per_positive),
          neg_rng);
      for (std::int32_t item : negatives) {
        instances.push_back({u, item, 0.0});
      }
    }
    Rng shuffle_rng(derive_seed(seed, seed_tag::kShuffle,
                                static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(instances);

    double loss_sum = 0.0;
    std::int64_t batches = 0;
    for (std::size_t start_i = 0; start_i < instances.size();
         start_i += static_cast<std::size_t>(opt.fit.batch_size)) {
      const std::size_t stop =
          std::min(instances.size(),
                   start_i + static_cast<std::size_t>(opt.fit.batch_size));
      batch.assign(instances.begin() + start_i, instances.begin() + stop);
      loss_sum += forward_backward(result.params, result.users, batch, grads);
      adam.apply(opt.fit.adam, grads, result.params, result.users);
      ++batches;
    }

    RoundRecord rec;
    rec.round = epoch;
    rec.loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
    if (is_eval_round(epoch, opt.epochs, opt.eval_every)) {
      const EvalResult ev =
          evaluate(result.params, result.users, split, opt.eval_k);
      rec.hr = ev.hr;
      rec.ndcg = ev.ndcg;
      result.final_eval = ev;
    }
    rec.seconds = seconds_since(start);
    result.rounds.push_back(rec);
    if (on_round) {
      on_round(rec);
    }
  }
  return result;
}

}  // namespace fedncf
