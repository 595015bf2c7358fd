#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedncf/dataset.hpp"

namespace fedncf {

/// Knobs for the generated implicit-feedback corpus. Defaults mirror the
/// shape of the classic 100k movie-ratings benchmark (943 users, 1682 items,
/// about 100k interactions) so experiments behave comparably when the real
/// file is absent.
struct SyntheticSpec {
  std::int32_t num_users = 943;
  std::int32_t num_items = 1682;
  std::size_t target_interactions = 100000;
  // High enough that a 12-dimensional bilinear model cannot span the planted
  // structure; richer models keep an edge over it at long training budgets.
  int latent_dim = 24;
  // Strength of the planted low-rank preference signal and of the shared
  // item-popularity signal, in logit units.
  double taste_scale = 2.2;
  double popularity_scale = 1.2;
  // Tilt of the per-user timestamp order toward rare items arriving last, in
  // logit units against the popularity term; 0 keeps the order uniform.
  // Real rating logs share this trait: items added late in the collection
  // window hold few ratings but the most recent timestamps, so the held-out
  // latest interaction leans toward the catalog tail.
  double recency_bias = 0.0;
  int min_per_user = 20;
  std::uint64_t seed = 101;
};

/// Deterministic corpus with planted structure: each user picks its
/// interaction set by Gumbel-top-k over logits built from a low-rank
/// user-item affinity plus a Zipf-like popularity term, so the held-out item
/// is genuinely predictable from the rest. Timestamps follow a per-user
/// random order, optionally tilted so rare items land late.
std::vector<RawInteraction> generate_synthetic(const SyntheticSpec& spec);

/// Writes the corpus as "user<TAB>item<TAB>rating<TAB>timestamp" lines,
/// loadable with the default column schema.
void write_synthetic_tsv(const std::string& path, const SyntheticSpec& spec);

}  // namespace fedncf
