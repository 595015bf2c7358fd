#include "fedncf/eval.hpp"

#include <cmath>

#include "fedncf/errors.hpp"

namespace fedncf {

int rank_of_target(const std::vector<std::int32_t>& items,
                   const std::vector<double>& scores,
                   std::size_t target_index) {
  if (items.size() != scores.size() || target_index >= items.size()) {
    throw RunError("rank_of_target: bad candidate list");
  }
  const double target_score = scores[target_index];
  const std::int32_t target_item = items[target_index];
  int rank = 1;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i == target_index) {
      continue;
    }
    if (scores[i] > target_score ||
        (scores[i] == target_score && items[i] < target_item)) {
      ++rank;
    }
  }
  return rank;
}

double hit_rate_from_rank(int rank, int k) { return rank <= k ? 1.0 : 0.0; }

double ndcg_from_rank(int rank, int k) {
  if (rank > k) {
    return 0.0;
  }
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

EvalResult evaluate(const ModelParams& params, const UserBank& users,
                    const LooSplit& split, int k) {
  const std::int32_t num_users = split.train.num_users;
  if (num_users <= 0) {
    throw RunError("evaluate: empty split");
  }

  double hr_sum = 0.0;
  double ndcg_sum = 0.0;
  std::vector<std::int32_t> candidates;
  std::vector<double> scores;
  for (std::int32_t u = 0; u < num_users; ++u) {
    candidates.clear();
    candidates.push_back(split.test_items[u]);
    candidates.insert(candidates.end(), split.eval_negatives[u].begin(),
                      split.eval_negatives[u].end());
    predict_items(params, users, u, candidates, scores);
    const int rank = rank_of_target(candidates, scores, 0);
    hr_sum += hit_rate_from_rank(rank, k);
    ndcg_sum += ndcg_from_rank(rank, k);
  }
  return EvalResult{hr_sum / num_users, ndcg_sum / num_users};
}

}  // namespace fedncf
