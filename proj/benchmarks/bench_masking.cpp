#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "fedncf/model.hpp"
#include "fedncf/rng.hpp"
#include "fedncf/secagg.hpp"

namespace {

using namespace fedncf;

// The shape the timing budget is written against: GMF, 1682 items, 12
// factors, 20 clients per aggregation round.
ModelConfig bench_config() {
  ModelConfig cfg;
  cfg.kind = ModelKind::kGmf;
  cfg.num_items = 1682;
  cfg.embedding_dim = 12;
  return cfg;
}

LocalUpdate make_update(const ModelConfig& cfg, std::int32_t client_id) {
  const ModelParams params = init_model(cfg, 7 + client_id);
  LocalUpdate u;
  u.client_id = client_id;
  u.item_gmf = params.item_gmf;
  u.item_mlp = params.item_mlp;
  u.network = params.network;
  u.touched.assign(cfg.num_items, 0);
  Rng rng(derive_seed(99, client_id));
  for (int i = 0; i < 120; ++i) {
    u.touched[rng.below(cfg.num_items)] = 1;
  }
  u.instance_count = 600;
  return u;
}

void BM_EncodeUpdate(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const LocalUpdate u = make_update(cfg, 0);
  for (auto _ : state) {
    auto payload = encode_update(u, 16);
    benchmark::DoNotOptimize(payload);
  }
}
BENCHMARK(BM_EncodeUpdate);

void BM_DeriveMasks(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const int clients = static_cast<int>(state.range(0));
  std::vector<std::int32_t> ids(clients);
  std::iota(ids.begin(), ids.end(), 0);
  const PairwiseSeeds seeds(12345);
  for (auto _ : state) {
    auto mask = derive_masks(cfg, 0, ids, seeds);
    benchmark::DoNotOptimize(mask);
  }
}
BENCHMARK(BM_DeriveMasks)->Arg(2)->Arg(20)->Arg(150);

void BM_DeriveAndApply(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const LocalUpdate u = make_update(cfg, 0);
  std::vector<std::int32_t> ids(20);
  std::iota(ids.begin(), ids.end(), 0);
  const PairwiseSeeds seeds(12345);
  for (auto _ : state) {
    auto payload = encode_update(u, 16);
    auto mask = derive_masks(cfg, 0, ids, seeds);
    apply_mask(payload, mask);
    benchmark::DoNotOptimize(payload);
  }
}
BENCHMARK(BM_DeriveAndApply);

void BM_SecureRound(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const ModelParams prev = init_model(cfg, 1);
  std::vector<LocalUpdate> updates;
  for (int i = 0; i < 20; ++i) {
    updates.push_back(make_update(cfg, i));
  }
  for (auto _ : state) {
    auto params = secure_round(prev, updates, 5555, 16);
    benchmark::DoNotOptimize(params);
  }
}
BENCHMARK(BM_SecureRound);

}  // namespace

BENCHMARK_MAIN();
