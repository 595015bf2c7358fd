#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedncf/aggregate.hpp"
#include "fedncf/model.hpp"

namespace fedncf {

/// Two's-complement fixed-point codec onto the uint64 ring. Addition of
/// encodings is ring addition, so pairwise masks cancel bit-exactly.
struct FixedPoint {
  int scale_bits = 16;

  std::uint64_t encode(double x) const;
  /// Interprets v as a signed ring element and undoes the scaling. Safe for
  /// sums of encodings as long as the signed magnitude stays below 2^63.
  double decode(std::uint64_t v) const;
};

/// Symmetric pairwise seeds for one aggregation round: both ends of a pair
/// derive the same 64-bit seed. Stands in for the key agreement a deployment
/// would run.
class PairwiseSeeds {
 public:
  explicit PairwiseSeeds(std::uint64_t round_seed) : round_seed_(round_seed) {}

  std::uint64_t agreed(std::int32_t a, std::int32_t b) const;

 private:
  std::uint64_t round_seed_;
};

/// Ring elements in one client's upload: item embedding matrices row-major
/// (gmf path then mlp path), the dense network (per layer: weights row-major,
/// then biases; tower first, prediction last), then the participation vector.
std::size_t payload_length(const ModelConfig& config);

/// Ring mask elements one client generates per aggregation round:
/// payload_length times (num_clients - 1) pairs.
std::size_t count_masked_parameters(const ModelConfig& config, int num_clients);

/// Fixed-point encoding of one update in the payload_length layout. Item rows
/// the client never touched are zeroed before encoding, so they add nothing
/// to the server's per-item sums. Network entries are premultiplied by
/// touched_count; participation flags are raw 0/1 ring elements.
std::vector<std::uint64_t> encode_update(const LocalUpdate& update,
                                         int scale_bits);

/// Combined mask for `self` against every other participant: the pair seed is
/// expanded to payload-length ring values, added when self < peer and
/// subtracted otherwise. If `generated_count` is given it receives the number
/// of mask elements produced.
std::vector<std::uint64_t> derive_masks(const ModelConfig& config,
                                        std::int32_t self,
                                        const std::vector<std::int32_t>& participants,
                                        const PairwiseSeeds& seeds,
                                        std::size_t* generated_count = nullptr);

/// In-place ring addition of a mask onto a payload.
void apply_mask(std::vector<std::uint64_t>& payload,
                const std::vector<std::uint64_t>& mask);

/// Server side: ring-sums the masked payloads (masks cancel), then decodes.
/// Item row k becomes the decoded sum divided by its participation count,
/// carried over from `prev` when no participant touched it; the network is
/// divided by the total participation mass.
ModelParams secure_aggregate(const ModelParams& prev,
                             const std::vector<std::vector<std::uint64_t>>& masked_payloads,
                             int scale_bits);

/// Whole masked exchange for one aggregation round: encode every client,
/// apply pairwise masks, sum and decode. Equals mf_fed_avg on the same
/// updates up to fixed-point quantization.
ModelParams secure_round(const ModelParams& prev,
                         const std::vector<LocalUpdate>& updates,
                         std::uint64_t round_seed, int scale_bits);

}  // namespace fedncf
