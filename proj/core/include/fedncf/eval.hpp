#pragma once

#include <cstdint>
#include <vector>

#include "fedncf/dataset.hpp"
#include "fedncf/model.hpp"

namespace fedncf {

struct EvalResult {
  double hr = 0.0;
  double ndcg = 0.0;
};

/// 1-based rank of the candidate at `target_index` when candidates are
/// ordered by score descending with item id ascending as the tie-break.
int rank_of_target(const std::vector<std::int32_t>& items,
                   const std::vector<double>& scores,
                   std::size_t target_index);

double hit_rate_from_rank(int rank, int k);
double ndcg_from_rank(int rank, int k);

/// Leave-one-out evaluation: for each user, ranks the held-out positive
/// against that user's fixed negatives and averages HR@k and NDCG@k over all
/// users.
EvalResult evaluate(const ModelParams& params, const UserBank& users,
                    const LooSplit& split, int k);

}  // namespace fedncf
