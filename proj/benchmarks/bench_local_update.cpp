#include <benchmark/benchmark.h>

#include <vector>

#include "fedncf/fedsim.hpp"
#include "fedncf/model.hpp"
#include "fedncf/rng.hpp"

namespace {

using namespace fedncf;

// One client with a typical interaction count on the 1682-item catalogue.
void bench_client(benchmark::State& state, ModelKind kind) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.num_items = 1682;
  cfg.embedding_dim = 12;

  const ModelParams params = init_model(cfg, 3);
  std::vector<std::int32_t> positives;
  Rng rng(17);
  while (positives.size() < 100) {
    const std::int32_t item = static_cast<std::int32_t>(rng.below(1682));
    if (std::find(positives.begin(), positives.end(), item) == positives.end()) {
      positives.push_back(item);
    }
  }
  std::sort(positives.begin(), positives.end());

  FitOptions fit;
  UserBank users = init_users(cfg, 1, 3);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    LocalUpdate u = client_update(params, users, 0, positives, 1682, fit, seed++);
    benchmark::DoNotOptimize(u);
  }
}

void BM_ClientUpdateGmf(benchmark::State& state) {
  bench_client(state, ModelKind::kGmf);
}
BENCHMARK(BM_ClientUpdateGmf);

void BM_ClientUpdateMlp(benchmark::State& state) {
  bench_client(state, ModelKind::kMlp);
}
BENCHMARK(BM_ClientUpdateMlp);

void BM_ClientUpdateNeuMf(benchmark::State& state) {
  bench_client(state, ModelKind::kNeuMf);
}
BENCHMARK(BM_ClientUpdateNeuMf);

}  // namespace

BENCHMARK_MAIN();
