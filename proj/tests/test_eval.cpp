#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fedncf/eval.hpp"
#include "fedncf/model.hpp"
#include "fedncf/rng.hpp"

using namespace fedncf;

namespace {

// Reference ranking: stable sort of (score desc, item asc) index pairs.
int brute_force_rank(const std::vector<std::int32_t>& items,
                     const std::vector<double>& scores,
                     std::size_t target_index) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return items[a] < items[b];
  });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (order[pos] == target_index) return static_cast<int>(pos) + 1;
  }
  return -1;
}

}  // namespace

TEST_CASE("rank agrees with a full sort on random lists with ties") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<std::int32_t> items(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      items[i] = static_cast<std::int32_t>(i);
      // Coarse grid forces frequent score ties.
      scores[i] = static_cast<double>(rng.below(8)) / 4.0;
    }
    Rng shuf(trial);
    shuf.shuffle(items);
    const std::size_t target = rng.below(n);
    CHECK(rank_of_target(items, scores, target) ==
          brute_force_rank(items, scores, target));
  }
}

TEST_CASE("score ties break toward the smaller item id") {
  const std::vector<std::int32_t> items = {30, 10, 20};
  const std::vector<double> scores = {0.5, 0.5, 0.5};
  CHECK(rank_of_target(items, scores, 0) == 3);
  CHECK(rank_of_target(items, scores, 1) == 1);
  CHECK(rank_of_target(items, scores, 2) == 2);
}

TEST_CASE("rank metrics hit their pinned values") {
  CHECK(hit_rate_from_rank(1, 10) == 1.0);
  CHECK(hit_rate_from_rank(10, 10) == 1.0);
  CHECK(hit_rate_from_rank(11, 10) == 0.0);

  CHECK(ndcg_from_rank(1, 10) == 1.0);
  const double ln2 = 0.6931471805599453;
  CHECK(ndcg_from_rank(2, 10) ==
        doctest::Approx(ln2 / std::log(3.0)).epsilon(1e-15));
  CHECK(ndcg_from_rank(10, 10) ==
        doctest::Approx(1.0 / std::log2(11.0)).epsilon(1e-15));
  CHECK(ndcg_from_rank(11, 10) == 0.0);
  CHECK(ndcg_from_rank(3, 2) == 0.0);

  // The discounted gain never exceeds a hit and decays monotonically.
  double last = 2.0;
  for (int r = 1; r <= 10; ++r) {
    const double g = ndcg_from_rank(r, 10);
    CHECK(g > 0.0);
    CHECK(g <= 1.0);
    CHECK(g < last);
    last = g;
  }
}

TEST_CASE("a random scorer hits at roughly k over candidate count") {
  // With 1 target among 101 candidates and k = 10, a scorer that knows
  // nothing lands the target in the top ten with probability 10/101.
  Rng rng(99);
  const int users = 4000;
  double hr_sum = 0.0;
  for (int u = 0; u < users; ++u) {
    std::vector<std::int32_t> items(101);
    std::vector<double> scores(101);
    for (int i = 0; i < 101; ++i) {
      items[i] = i;
      scores[i] = rng.uniform();
    }
    const int rank = rank_of_target(items, scores, 0);
    hr_sum += hit_rate_from_rank(rank, 10);
  }
  const double expected = 10.0 / 101.0;  // 0.09900990099009901
  CHECK(std::abs(hr_sum / users - expected) < 0.02);
}

TEST_CASE("leave one out evaluation scores a transparent model") {
  // One-dimensional dot-product model with weight 1: the score ordering is
  // exactly the ordering of item embedding values.
  ModelConfig cfg;
  cfg.kind = ModelKind::kGmf;
  cfg.num_items = 30;
  cfg.embedding_dim = 1;

  ModelParams params = init_model(cfg, 1);
  for (std::int32_t k = 0; k < 30; ++k) {
    params.item_gmf(k, 0) = static_cast<double>(k);
  }
  params.network.layers[0].weight(0, 0) = 1.0;
  params.network.layers[0].bias[0] = 0.0;

  UserBank users;
  users.gmf = Matrix(2, 1);
  users.gmf(0, 0) = 1.0;
  users.gmf(1, 0) = 1.0;
  users.mlp = Matrix(2, 0);

  LooSplit split;
  split.train.num_users = 2;
  split.train.num_items = 30;
  split.test_items = {29, 5};
  // User 0's target outranks all its negatives; user 1's target sits below
  // exactly ten of them, one past the cutoff.
  split.eval_negatives = {{0, 1, 2, 3, 4}, {6, 7, 8, 9, 10, 11, 12, 13, 14, 15}};

  const EvalResult at10 = evaluate(params, users, split, 10);
  CHECK(at10.hr == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(at10.ndcg == doctest::Approx(0.5).epsilon(1e-15));

  const EvalResult at1 = evaluate(params, users, split, 1);
  CHECK(at1.hr == doctest::Approx(0.5).epsilon(1e-15));

  // Tighten the cutoff below user 1's rank of 11: only user 0 still hits.
  const EvalResult at11 = evaluate(params, users, split, 11);
  CHECK(at11.hr == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at11.ndcg ==
        doctest::Approx(0.5 * (1.0 + 1.0 / std::log2(12.0))).epsilon(1e-12));
}
