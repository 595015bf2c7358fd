#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fedncf/aggregate.hpp"
#include "fedncf/dataset.hpp"
#include "fedncf/eval.hpp"
#include "fedncf/model.hpp"

namespace fedncf {

/// Local optimizer settings shared by federated clients and the centralized
/// baseline.
struct FitOptions {
  int local_epochs = 2;
  int negatives_per_positive = 4;
  int batch_size = 256;
  AdamConfig adam;
};

struct FedOptions {
  Strategy strategy = Strategy::kMfFedAvg;
  int clients_per_round = 20;
  int global_rounds = 100;
  int eval_every = 5;
  int eval_k = 10;
  int scale_bits = 16;
  // Worker threads for client updates inside an aggregation round. Results
  // are reduced in client-id order, so the thread count never changes any
  // output.
  int threads = 1;
  FitOptions fit;
};

struct CentralOptions {
  int epochs = 100;
  int eval_every = 5;
  int eval_k = 10;
  FitOptions fit;
};

/// One global round (or centralized epoch) of the run log. hr/ndcg are -1
/// when the round was not an evaluation round. seconds is wall time and is
/// kept out of the deterministic outputs.
struct RoundRecord {
  int round = 0;
  double loss = 0.0;
  double hr = -1.0;
  double ndcg = -1.0;
  std::uint64_t uploaded_elements = 0;
  std::uint64_t masked_elements = 0;
  double seconds = 0.0;

  bool evaluated() const { return hr >= 0.0; }
};

struct RunResult {
  std::vector<RoundRecord> rounds;
  ModelParams params;
  UserBank users;
  EvalResult final_eval;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

/// Client ids shuffled with derive_seed(seed, kSelection, round) and chunked
/// into groups of at most per_round: every client appears exactly once per
/// global round.
std::vector<std::vector<std::int32_t>> partition_clients(
    std::int32_t num_clients, int per_round, std::uint64_t round_seed);

/// One client's local pass: copies the shared parameters, trains
/// fit.local_epochs of minibatch Adam on the client's positives plus freshly
/// sampled negatives (all local randomness comes from `seed`), and returns
/// the update. The client's own row of `users` is updated in place; no other
/// row is read or written.
LocalUpdate client_update(const ModelParams& global_params, UserBank& users,
                          std::int32_t user,
                          const std::vector<std::int32_t>& positives,
                          std::int32_t num_items, const FitOptions& fit,
                          std::uint64_t seed, double* mean_loss = nullptr);

RunResult run_federated(const LooSplit& split, const ModelConfig& model,
                        const FedOptions& opt, std::uint64_t seed,
                        const RoundCallback& on_round = {});

RunResult run_centralized(const LooSplit& split, const ModelConfig& model,
                          const CentralOptions& opt, std::uint64_t seed,
                          const RoundCallback& on_round = {});

}  // namespace fedncf
