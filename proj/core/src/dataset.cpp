#include "fedncf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fedncf/errors.hpp"

namespace fedncf {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) +
                    ": cannot parse rating '" + s + "'");
  }
  return value;
}

std::int64_t parse_int64(const std::string& s, std::size_t line_no) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) +
                    ": cannot parse timestamp '" + s + "'");
  }
  return value;
}

}  // namespace

ColumnSchema ColumnSchema::parse(const std::string& columns_csv,
                                 const std::string& separator_name,
                                 int header_lines) {
  ColumnSchema schema;
  if (separator_name == "tab") {
    schema.separator = '\t';
  } else if (separator_name == "comma") {
    schema.separator = ',';
  } else if (separator_name == "space") {
    schema.separator = ' ';
  } else if (separator_name == "semicolon") {
    schema.separator = ';';
  } else if (separator_name.size() == 1) {
    schema.separator = separator_name[0];
  } else {
    throw ConfigError("unknown separator '" + separator_name + "'");
  }

  if (header_lines < 0) {
    throw ConfigError("header_lines must be >= 0");
  }
  schema.header_lines = header_lines;

  schema.columns.clear();
  int users = 0, items = 0;
  for (const std::string& name : split(columns_csv, ',')) {
    if (name == "user") {
      ++users;
    } else if (name == "item") {
      ++items;
    } else if (name != "rating" && name != "timestamp" && name != "ignore") {
      throw ConfigError("unknown column name '" + name + "'");
    }
    schema.columns.push_back(name);
  }
  if (users != 1 || items != 1) {
    throw ConfigError("schema needs exactly one 'user' and one 'item' column");
  }
  return schema;
}

std::vector<RawInteraction> load_interactions(const std::string& path,
                                              const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open dataset file '" + path + "'");
  }

  std::vector<RawInteraction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line_no <= static_cast<std::size_t>(schema.header_lines)) {
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split(line, schema.separator);
    if (fields.size() < schema.columns.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(schema.columns.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }

    RawInteraction rec;
    rec.line_number = line_no;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const std::string& name = schema.columns[c];
      if (name == "user") {
        rec.user_key = fields[c];
      } else if (name == "item") {
        rec.item_key = fields[c];
      } else if (name == "rating") {
        rec.rating = parse_double(fields[c], line_no);
      } else if (name == "timestamp") {
        rec.timestamp = parse_int64(fields[c], line_no);
      }
    }
    if (rec.user_key.empty() || rec.item_key.empty()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": empty user or item key");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Dataset binarize_and_filter(const std::vector<RawInteraction>& raw,
                            int min_interactions) {
  // Deduplicate (user, item) keeping the latest by (timestamp, line order).
  struct Winner {
    std::int64_t timestamp;
    std::uint64_t order;
  };
  std::unordered_map<std::string, std::unordered_map<std::string, Winner>> best;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawInteraction& r = raw[i];
    const std::int64_t ts = r.timestamp.value_or(0);
    auto& slot = best[r.user_key];
    auto it = slot.find(r.item_key);
    if (it == slot.end() || ts > it->second.timestamp ||
        (ts == it->second.timestamp && i > it->second.order)) {
      slot[r.item_key] = Winner{ts, static_cast<std::uint64_t>(i)};
    }
  }

  std::unordered_set<std::string> kept_users;
  for (const auto& [user, items] : best) {
    if (static_cast<int>(items.size()) >=
        static_cast<int>(min_interactions)) {
      kept_users.insert(user);
    }
  }
  if (kept_users.empty()) {
    throw DataError("no users left after filtering (min_interactions=" +
                    std::to_string(min_interactions) + ")");
  }

  // Dense ids by first appearance in file order, counting only records whose
  // user survived. Which duplicate wins never affects the id assignment.
  Dataset data;
  std::unordered_map<std::string, std::int32_t> user_ids, item_ids;
  for (const RawInteraction& r : raw) {
    if (!kept_users.count(r.user_key)) {
      continue;
    }
    if (user_ids.emplace(r.user_key, data.num_users).second) {
      data.user_keys.push_back(r.user_key);
      ++data.num_users;
    }
    if (item_ids.emplace(r.item_key, data.num_items).second) {
      data.item_keys.push_back(r.item_key);
      ++data.num_items;
    }
  }

  for (const auto& [user_key, items] : best) {
    auto uit = user_ids.find(user_key);
    if (uit == user_ids.end()) {
      continue;
    }
    for (const auto& [item_key, win] : items) {
      Interaction rec;
      rec.user = uit->second;
      rec.item = item_ids.at(item_key);
      rec.timestamp = win.timestamp;
      rec.order = win.order;
      data.interactions.push_back(rec);
    }
  }
  std::sort(data.interactions.begin(), data.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              return a.user != b.user ? a.user < b.user : a.item < b.item;
            });
  return data;
}

std::vector<std::vector<std::int32_t>> Dataset::user_items() const {
  std::vector<std::vector<std::int32_t>> out(num_users);
  for (const Interaction& r : interactions) {
    out[r.user].push_back(r.item);
  }
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
  }
  return out;
}

LooSplit leave_one_out_split(const Dataset& data, int num_eval_negatives,
                             std::uint64_t seed) {
  if (num_eval_negatives < 0) {
    throw ConfigError("eval_negatives must be >= 0");
  }

  LooSplit split;
  split.train.num_users = data.num_users;
  split.train.num_items = data.num_items;
  split.train.user_keys = data.user_keys;
  split.train.item_keys = data.item_keys;
  split.test_items.assign(data.num_users, -1);
  split.eval_negatives.resize(data.num_users);

  // Latest interaction per user by (timestamp, original line order).
  std::vector<std::size_t> latest(data.num_users, SIZE_MAX);
  for (std::size_t i = 0; i < data.interactions.size(); ++i) {
    const Interaction& r = data.interactions[i];
    if (latest[r.user] == SIZE_MAX) {
      latest[r.user] = i;
      continue;
    }
    const Interaction& cur = data.interactions[latest[r.user]];
    if (r.timestamp > cur.timestamp ||
        (r.timestamp == cur.timestamp && r.order > cur.order)) {
      latest[r.user] = i;
    }
  }

  std::vector<std::vector<std::int32_t>> seen(data.num_users);
  for (std::size_t i = 0; i < data.interactions.size(); ++i) {
    const Interaction& r = data.interactions[i];
    seen[r.user].push_back(r.item);
    if (latest[r.user] == i) {
      split.test_items[r.user] = r.item;
    } else {
      split.train.interactions.push_back(r);
    }
  }

  for (std::int32_t u = 0; u < data.num_users; ++u) {
    if (split.test_items[u] < 0) {
      throw DataError("user " + std::to_string(u) + " has no interactions");
    }
    std::sort(seen[u].begin(), seen[u].end());

    // Complement of the user's items, then a partial shuffle.
    std::vector<std::int32_t> pool;
    pool.reserve(data.num_items - seen[u].size());
    std::size_t s = 0;
    for (std::int32_t item = 0; item < data.num_items; ++item) {
      while (s < seen[u].size() && seen[u][s] < item) {
        ++s;
      }
      if (s >= seen[u].size() || seen[u][s] != item) {
        pool.push_back(item);
      }
    }
    if (pool.size() < static_cast<std::size_t>(num_eval_negatives)) {
      throw DataError("user " + std::to_string(u) + " has only " +
                      std::to_string(pool.size()) +
                      " unseen items, cannot sample " +
                      std::to_string(num_eval_negatives) +
                      " evaluation negatives");
    }
    Rng rng(derive_seed(seed, seed_tag::kEvalNegatives,
                        static_cast<std::uint64_t>(u)));
    auto& negs = split.eval_negatives[u];
    negs.reserve(num_eval_negatives);
    for (int k = 0; k < num_eval_negatives; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
      negs.push_back(pool[k]);
    }
  }
  return split;
}

std::vector<std::int32_t> sample_train_negatives(
    const std::vector<std::int32_t>& positive_items, std::int32_t num_items,
    std::size_t count, Rng& rng) {
  std::vector<std::int32_t> pool;
  pool.reserve(num_items - positive_items.size());
  std::size_t s = 0;
  for (std::int32_t item = 0; item < num_items; ++item) {
    while (s < positive_items.size() && positive_items[s] < item) {
      ++s;
    }
    if (s >= positive_items.size() || positive_items[s] != item) {
      pool.push_back(item);
    }
  }
  if (pool.empty()) {
    if (count == 0) {
      return {};
    }
    throw DataError("cannot sample negatives: user has interacted with every item");
  }

  std::vector<std::int32_t> out;
  out.reserve(count);
  if (pool.size() >= count) {
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
      out.push_back(pool[k]);
    }
  } else {
    // Pool smaller than the request: fall back to replacement.
    for (std::size_t k = 0; k < count; ++k) {
      out.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
    }
  }
  return out;
}

void dump_reindex_maps(const Dataset& data, const std::string& prefix) {
  auto write_map = [](const std::string& path,
                      const std::vector<std::string>& keys) {
    std::ofstream out(path);
    if (!out) {
      throw RunError("cannot write '" + path + "'");
    }
    for (std::size_t id = 0; id < keys.size(); ++id) {
      out << id << '\t' << keys[id] << '\n';
    }
  };
  write_map(prefix + ".users.tsv", data.user_keys);
  write_map(prefix + ".items.tsv", data.item_keys);
}

}  // namespace fedncf
