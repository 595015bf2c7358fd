#include "fedncf/secagg.hpp"

#include <algorithm>
#include <cmath>

#include "fedncf/errors.hpp"
#include "fedncf/rng.hpp"

namespace fedncf {

namespace {

/// Section offsets of the pinned payload layout.
struct PayloadLayout {
  std::size_t gmf_off = 0;
  std::size_t mlp_off = 0;
  std::size_t net_off = 0;
  std::size_t p_off = 0;
  std::size_t length = 0;

  static PayloadLayout of(const ModelConfig& config) {
    const std::size_t n = static_cast<std::size_t>(config.num_items);
    const std::size_t d = static_cast<std::size_t>(config.embedding_dim);
    PayloadLayout lay;
    lay.gmf_off = 0;
    lay.mlp_off = lay.gmf_off + (config.has_gmf_path() ? n * d : 0);
    lay.net_off = lay.mlp_off + (config.has_mlp_path() ? n * d : 0);
    lay.p_off = lay.net_off +
                (transmitted_parameter_count(config) -
                 (config.has_gmf_path() ? n * d : 0) -
                 (config.has_mlp_path() ? n * d : 0));
    lay.length = lay.p_off + n;
    return lay;
  }
};

}  // namespace

std::uint64_t FixedPoint::encode(double x) const {
  // Two's complement onto the ring; callers keep |x| far below 2^(63-scale).
  const long long scaled = std::llround(std::ldexp(x, scale_bits));
  return static_cast<std::uint64_t>(scaled);
}

double FixedPoint::decode(std::uint64_t v) const {
  return std::ldexp(static_cast<double>(static_cast<std::int64_t>(v)),
                    -scale_bits);
}

std::uint64_t PairwiseSeeds::agreed(std::int32_t a, std::int32_t b) const {
  const std::uint64_t lo = static_cast<std::uint64_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max(a, b));
  return derive_seed(round_seed_, lo, hi);
}

std::size_t payload_length(const ModelConfig& config) {
  return transmitted_parameter_count(config) +
         static_cast<std::size_t>(config.num_items);
}

std::size_t count_masked_parameters(const ModelConfig& config,
                                    int num_clients) {
  if (num_clients < 1) {
    throw RunError("count_masked_parameters: need at least one client");
  }
  return payload_length(config) * static_cast<std::size_t>(num_clients - 1);
}

std::vector<std::uint64_t> encode_update(const LocalUpdate& update,
                                         int scale_bits) {
  const FixedPoint fp{scale_bits};
  const std::size_t num_items = update.touched.size();
  const double mass = static_cast<double>(update.touched_count());

  std::vector<std::uint64_t> payload;
  payload.reserve(update.item_gmf.size() + update.item_mlp.size() +
                  update.network.parameter_count() + num_items);

  auto put_items = [&](const Matrix& m) {
    for (std::size_t k = 0; k < m.rows; ++k) {
      if (!update.touched[k]) {
        // Rows this client never trained contribute nothing to the per-item
        // sums; the server restores them from its own copy.
        payload.insert(payload.end(), m.cols, 0u);
        continue;
      }
      const double* row = m.row(k);
      for (std::size_t c = 0; c < m.cols; ++c) {
        payload.push_back(fp.encode(row[c]));
      }
    }
  };
  put_items(update.item_gmf);
  put_items(update.item_mlp);

  // Network entries carry their weight: the server can only divide the blind
  // sum by the total mass, so each client premultiplies by its own.
  for (const DenseLayer& layer : update.network.layers) {
    for (double w : layer.weight.data) {
      payload.push_back(fp.encode(mass * w));
    }
    for (double b : layer.bias) {
      payload.push_back(fp.encode(mass * b));
    }
  }

  // Participation flags ride along as plain ring integers, not fixed-point.
  for (std::uint8_t flag : update.touched) {
    payload.push_back(flag ? 1u : 0u);
  }
  return payload;
}

std::vector<std::uint64_t> derive_masks(
    const ModelConfig& config, std::int32_t self,
    const std::vector<std::int32_t>& participants, const PairwiseSeeds& seeds,
    std::size_t* generated_count) {
  const std::size_t len = payload_length(config);
  std::vector<std::uint64_t> mask(len, 0u);
  std::size_t generated = 0;
  for (std::int32_t peer : participants) {
    if (peer == self) {
      continue;
    }
    SplitMix64 prg(seeds.agreed(self, peer));
    if (self < peer) {
      for (std::size_t i = 0; i < len; ++i) {
        mask[i] += prg.next();
      }
    } else {
      for (std::size_t i = 0; i < len; ++i) {
        mask[i] -= prg.next();
      }
    }
    generated += len;
  }
  if (generated_count != nullptr) {
    *generated_count = generated;
  }
  return mask;
}

void apply_mask(std::vector<std::uint64_t>& payload,
                const std::vector<std::uint64_t>& mask) {
  if (payload.size() != mask.size()) {
    throw RunError("apply_mask: length mismatch");
  }
  for (std::size_t i = 0; i < payload.size(); ++i) {
    payload[i] += mask[i];
  }
}

ModelParams secure_aggregate(
    const ModelParams& prev,
    const std::vector<std::vector<std::uint64_t>>& masked_payloads,
    int scale_bits) {
  if (masked_payloads.empty()) {
    throw RunError("secure_aggregate: no payloads");
  }
  const PayloadLayout lay = PayloadLayout::of(prev.config);
  for (const auto& p : masked_payloads) {
    if (p.size() != lay.length) {
      throw RunError("secure_aggregate: payload length mismatch");
    }
  }

  // Ring addition is commutative bit-for-bit, so the sum (and thus all
  // downstream output) is independent of arrival order.
  std::vector<std::uint64_t> total(lay.length, 0u);
  for (const auto& p : masked_payloads) {
    for (std::size_t i = 0; i < lay.length; ++i) {
      total[i] += p[i];
    }
  }

  const FixedPoint fp{scale_bits};
  const std::size_t num_items = static_cast<std::size_t>(prev.config.num_items);
  const std::size_t d = static_cast<std::size_t>(prev.config.embedding_dim);

  std::uint64_t mass = 0;
  for (std::size_t k = 0; k < num_items; ++k) {
    mass += total[lay.p_off + k];
  }

  ModelParams out = prev;
  auto decode_items = [&](std::size_t off, Matrix& m) {
    if (m.empty()) {
      return;
    }
    for (std::size_t k = 0; k < num_items; ++k) {
      const std::uint64_t num_k = total[lay.p_off + k];
      if (num_k == 0) {
        continue;  // keep the server's row
      }
      double* dst = m.row(k);
      for (std::size_t c = 0; c < d; ++c) {
        dst[c] = fp.decode(total[off + k * d + c]) /
                 static_cast<double>(num_k);
      }
    }
  };
  decode_items(lay.gmf_off, out.item_gmf);
  decode_items(lay.mlp_off, out.item_mlp);

  if (mass > 0) {
    std::size_t pos = lay.net_off;
    for (DenseLayer& layer : out.network.layers) {
      for (double& w : layer.weight.data) {
        w = fp.decode(total[pos++]) / static_cast<double>(mass);
      }
      for (double& b : layer.bias) {
        b = fp.decode(total[pos++]) / static_cast<double>(mass);
      }
    }
  }
  return out;
}

ModelParams secure_round(const ModelParams& prev,
                         const std::vector<LocalUpdate>& updates,
                         std::uint64_t round_seed, int scale_bits) {
  if (updates.empty()) {
    throw RunError("secure_round: no updates");
  }
  std::vector<std::int32_t> ids;
  ids.reserve(updates.size());
  for (const LocalUpdate& u : updates) {
    ids.push_back(u.client_id);
  }

  const PairwiseSeeds seeds(round_seed);
  std::vector<std::vector<std::uint64_t>> payloads;
  payloads.reserve(updates.size());
  for (const LocalUpdate& u : updates) {
    std::vector<std::uint64_t> payload = encode_update(u, scale_bits);
    const std::vector<std::uint64_t> mask =
        derive_masks(prev.config, u.client_id, ids, seeds, nullptr);
    apply_mask(payload, mask);
    payloads.push_back(std::move(payload));
  }
  return secure_aggregate(prev, payloads, scale_bits);
}

}  // namespace fedncf
