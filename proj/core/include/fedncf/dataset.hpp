#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedncf/rng.hpp"

namespace fedncf {

/// One parsed interaction line before any reindexing.
struct RawInteraction {
  std::string user_key;
  std::string item_key;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;
  std::size_t line_number = 0;
};

/// Column layout of an interaction file. `columns` names each field in file
/// order; recognised names are "user", "item", "rating", "timestamp" and
/// "ignore". "user" and "item" are mandatory.
struct ColumnSchema {
  char separator = '\t';
  std::vector<std::string> columns = {"user", "item", "rating", "timestamp"};
  int header_lines = 0;

  /// Builds a schema from config strings. `separator_name` is one of "tab",
  /// "comma", "space", "semicolon" or a single literal character. Throws
  /// ConfigError on unknown column or separator names.
  static ColumnSchema parse(const std::string& columns_csv,
                            const std::string& separator_name,
                            int header_lines);
};

/// Interactions after binarization: dense contiguous ids, one entry per
/// (user, item) pair. `order` preserves the dedup tie-break position so the
/// leave-one-out split stays reproducible when timestamps collide.
struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;
  std::int64_t timestamp = 0;
  std::uint64_t order = 0;
};

struct Dataset {
  std::int32_t num_users = 0;
  std::int32_t num_items = 0;
  std::vector<Interaction> interactions;
  // Dense id -> original key, by first appearance in the filtered stream.
  std::vector<std::string> user_keys;
  std::vector<std::string> item_keys;

  /// Items each user interacted with, ascending item id. Indexed by user id.
  std::vector<std::vector<std::int32_t>> user_items() const;
};

/// Per-user leave-one-out split. Train keeps the parent id space (no
/// reindexing), so num_users/num_items mirror the parent dataset even when a
/// user or item only appears in held-out entries.
struct LooSplit {
  Dataset train;
  // test_items[u] is the held-out positive for user u.
  std::vector<std::int32_t> test_items;
  // eval_negatives[u] holds the fixed candidate negatives for user u.
  std::vector<std::vector<std::int32_t>> eval_negatives;
};

/// Reads and parses an interaction file. Throws DataError with the offending
/// line number on malformed input, or if the file cannot be opened.
std::vector<RawInteraction> load_interactions(const std::string& path,
                                              const ColumnSchema& schema);

/// Deduplicates (user, item) pairs keeping the latest by (timestamp, line
/// order), drops users with fewer than `min_interactions` distinct items,
/// drops items left with no interactions, and assigns dense ids by first
/// appearance. Throws DataError if no users survive.
Dataset binarize_and_filter(const std::vector<RawInteraction>& raw,
                            int min_interactions);

/// Splits out each user's latest interaction as the test positive and samples
/// `num_eval_negatives` unseen items per user without replacement, seeded from
/// derive_seed(seed, kEvalNegatives, user). Throws DataError when a user has
/// fewer unseen items than requested.
LooSplit leave_one_out_split(const Dataset& data, int num_eval_negatives,
                             std::uint64_t seed);

/// Samples `count` negatives for one user from the items not in
/// `positive_items` (which must be sorted ascending). Sampling is without
/// replacement while the pool suffices, with replacement otherwise. Throws
/// DataError if the pool is empty and count > 0.
std::vector<std::int32_t> sample_train_negatives(
    const std::vector<std::int32_t>& positive_items, std::int32_t num_items,
    std::size_t count, Rng& rng);

/// Writes the dense-id -> original-key tables as two-column TSV files
/// (`<prefix>.users.tsv`, `<prefix>.items.tsv`).
void dump_reindex_maps(const Dataset& data, const std::string& prefix);

}  // namespace fedncf
