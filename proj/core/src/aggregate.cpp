#include "fedncf/aggregate.hpp"

#include <algorithm>
#include <numeric>

#include "fedncf/errors.hpp"

namespace fedncf {

namespace {

/// Indices of `updates` in ascending client id. Aggregation always reduces in
/// this order so results do not depend on arrival order.
std::vector<std::size_t> ordered_indices(const std::vector<LocalUpdate>& updates) {
  std::vector<std::size_t> idx(updates.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&updates](std::size_t a, std::size_t b) {
    return updates[a].client_id < updates[b].client_id;
  });
  return idx;
}

ModelParams zeros_like(const ModelConfig& config, const LocalUpdate& shape) {
  ModelParams out;
  out.config = config;
  out.item_gmf = Matrix(shape.item_gmf.rows, shape.item_gmf.cols);
  out.item_mlp = Matrix(shape.item_mlp.rows, shape.item_mlp.cols);
  out.network.layers.resize(shape.network.layers.size());
  for (std::size_t l = 0; l < shape.network.layers.size(); ++l) {
    const DenseLayer& src = shape.network.layers[l];
    out.network.layers[l] = DenseLayer(src.weight.rows, src.weight.cols);
  }
  return out;
}

void accumulate(ModelParams& acc, const LocalUpdate& u, double coeff) {
  for (std::size_t i = 0; i < u.item_gmf.size(); ++i) {
    acc.item_gmf.data[i] += coeff * u.item_gmf.data[i];
  }
  for (std::size_t i = 0; i < u.item_mlp.size(); ++i) {
    acc.item_mlp.data[i] += coeff * u.item_mlp.data[i];
  }
  for (std::size_t l = 0; l < u.network.layers.size(); ++l) {
    const DenseLayer& src = u.network.layers[l];
    DenseLayer& dst = acc.network.layers[l];
    for (std::size_t i = 0; i < src.weight.size(); ++i) {
      dst.weight.data[i] += coeff * src.weight.data[i];
    }
    for (std::size_t i = 0; i < src.bias.size(); ++i) {
      dst.bias[i] += coeff * src.bias[i];
    }
  }
}

/// Shared path of the full-matrix strategies: acc = sum coeff_i * update_i in
/// client-id order. With all-equal weights each coeff is exactly fl(1/k), so
/// the two strategies agree bit-for-bit on uniform inputs.
ModelParams weighted_mean(const ModelConfig& config,
                          const std::vector<LocalUpdate>& updates,
                          const std::vector<double>& coeff) {
  ModelParams acc = zeros_like(config, updates.front());
  const auto idx = ordered_indices(updates);
  for (std::size_t i : idx) {
    accumulate(acc, updates[i], coeff[i]);
  }
  return acc;
}

}  // namespace

Strategy strategy_from_string(const std::string& name) {
  if (name == "simple") return Strategy::kSimple;
  if (name == "fedavg") return Strategy::kFedAvg;
  if (name == "mffedavg") return Strategy::kMfFedAvg;
  if (name == "mfsecavg") return Strategy::kMfSecAvg;
  throw ConfigError("unknown strategy '" + name + "'");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kSimple: return "simple";
    case Strategy::kFedAvg: return "fedavg";
    case Strategy::kMfFedAvg: return "mffedavg";
    case Strategy::kMfSecAvg: return "mfsecavg";
  }
  return "?";
}

std::int64_t LocalUpdate::touched_count() const {
  std::int64_t n = 0;
  for (std::uint8_t flag : touched) {
    n += flag != 0;
  }
  return n;
}

ModelParams simple_average(const ModelConfig& config,
                           const std::vector<LocalUpdate>& updates) {
  if (updates.empty()) {
    throw RunError("simple_average: no updates");
  }
  const std::vector<double> coeff(
      updates.size(), 1.0 / static_cast<double>(updates.size()));
  return weighted_mean(config, updates, coeff);
}

ModelParams fed_avg(const ModelConfig& config,
                    const std::vector<LocalUpdate>& updates) {
  if (updates.empty()) {
    throw RunError("fed_avg: no updates");
  }
  double total = 0.0;
  for (const LocalUpdate& u : updates) {
    total += static_cast<double>(u.instance_count);
  }
  std::vector<double> coeff(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    // No instances anywhere this round: degrade to an unweighted mean.
    coeff[i] = total > 0.0
                   ? static_cast<double>(updates[i].instance_count) / total
                   : 1.0 / static_cast<double>(updates.size());
  }
  return weighted_mean(config, updates, coeff);
}

ModelParams mf_fed_avg(const ModelParams& prev,
                       const std::vector<LocalUpdate>& updates) {
  if (updates.empty()) {
    throw RunError("mf_fed_avg: no updates");
  }
  const std::size_t num_items = static_cast<std::size_t>(prev.config.num_items);
  for (const LocalUpdate& u : updates) {
    if (u.touched.size() != num_items) {
      throw RunError("mf_fed_avg: participation vector has wrong length");
    }
  }
  const auto idx = ordered_indices(updates);

  ModelParams out = prev;
  auto average_rows = [&](const Matrix& prev_m, Matrix& out_m,
                          auto row_of_update) {
    if (prev_m.empty()) {
      return;
    }
    const std::size_t d = prev_m.cols;
    std::vector<double> sum(d);
    for (std::size_t k = 0; k < num_items; ++k) {
      std::int64_t num_k = 0;
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t i : idx) {
        const LocalUpdate& u = updates[i];
        if (!u.touched[k]) {
          continue;
        }
        ++num_k;
        const double* row = row_of_update(u, k);
        for (std::size_t c = 0; c < d; ++c) {
          sum[c] += row[c];
        }
      }
      // Rows nobody trained stay exactly what the server already had.
      if (num_k == 0) {
        continue;
      }
      double* dst = out_m.row(k);
      for (std::size_t c = 0; c < d; ++c) {
        dst[c] = sum[c] / static_cast<double>(num_k);
      }
    }
  };
  average_rows(prev.item_gmf, out.item_gmf,
               [](const LocalUpdate& u, std::size_t k) { return u.item_gmf.row(k); });
  average_rows(prev.item_mlp, out.item_mlp,
               [](const LocalUpdate& u, std::size_t k) { return u.item_mlp.row(k); });

  std::vector<double> mass(updates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    mass[i] = static_cast<double>(updates[i].touched_count());
    total += mass[i];
  }
  if (total > 0.0) {
    for (std::size_t l = 0; l < out.network.layers.size(); ++l) {
      DenseLayer& dst = out.network.layers[l];
      std::fill(dst.weight.data.begin(), dst.weight.data.end(), 0.0);
      std::fill(dst.bias.begin(), dst.bias.end(), 0.0);
      for (std::size_t i : idx) {
        const LocalUpdate& u = updates[i];
        const double coeff = mass[i] / total;
        const DenseLayer& src = u.network.layers[l];
        for (std::size_t j = 0; j < src.weight.size(); ++j) {
          dst.weight.data[j] += coeff * src.weight.data[j];
        }
        for (std::size_t j = 0; j < src.bias.size(); ++j) {
          dst.bias[j] += coeff * src.bias[j];
        }
      }
    }
  }
  return out;
}

ModelParams aggregate(Strategy strategy, const ModelParams& prev,
                      const std::vector<LocalUpdate>& updates) {
  switch (strategy) {
    case Strategy::kSimple:
      return simple_average(prev.config, updates);
    case Strategy::kFedAvg:
      return fed_avg(prev.config, updates);
    case Strategy::kMfFedAvg:
      return mf_fed_avg(prev, updates);
    case Strategy::kMfSecAvg:
      throw RunError("masked aggregation runs through the secure pipeline");
  }
  throw RunError("unknown strategy");
}

}  // namespace fedncf
