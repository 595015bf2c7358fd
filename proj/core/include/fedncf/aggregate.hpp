#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedncf/model.hpp"

namespace fedncf {

enum class Strategy { kSimple, kFedAvg, kMfFedAvg, kMfSecAvg };

Strategy strategy_from_string(const std::string& name);
std::string to_string(Strategy strategy);

/// One client's upload: its full local copy of the shared parameters (rows it
/// never trained stay bit-equal to the global model it received), the item
/// participation vector, and the two weighting counts the strategies choose
/// between.
struct LocalUpdate {
  std::int32_t client_id = 0;
  Matrix item_gmf;
  Matrix item_mlp;
  NetworkParams network;
  // touched[k] == 1 iff item k appeared in this client's training instances.
  std::vector<std::uint8_t> touched;
  // Training instances this round: positives plus sampled negatives.
  std::int64_t instance_count = 0;

  std::int64_t touched_count() const;
};

/// Unweighted mean of the clients' full parameter copies.
ModelParams simple_average(const ModelConfig& config,
                           const std::vector<LocalUpdate>& updates);

/// Mean weighted by instance_count over the clients' full parameter copies.
ModelParams fed_avg(const ModelConfig& config,
                    const std::vector<LocalUpdate>& updates);

/// Item-row-aware averaging: row k of an item matrix becomes the unweighted
/// mean over only the clients whose participation vector marks k; rows no
/// client touched are copied bit-exactly from `prev`. Dense network weights
/// are averaged weighted by touched_count.
ModelParams mf_fed_avg(const ModelParams& prev,
                       const std::vector<LocalUpdate>& updates);

/// Dispatches the three plain strategies. kMfSecAvg has no plain form and is
/// rejected here; the simulator routes it through the masked pipeline.
ModelParams aggregate(Strategy strategy, const ModelParams& prev,
                      const std::vector<LocalUpdate>& updates);

}  // namespace fedncf
