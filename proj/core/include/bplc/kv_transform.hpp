#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bplc/bitplane.hpp"
#include "bplc/float_format.hpp"

namespace bplc {

/// Group of `tokens` KV vectors of `channels` entries each, token-major:
/// token t's full vector is contiguous at data[t*channels ..].
struct TokenGroup {
    size_t tokens = 0;
    size_t channels = 0;
    ValueBlock data;

    const FloatFormat& format() const { return data.format(); }
    bool operator==(const TokenGroup&) const = default;
};

/// Channel-major rearrangement of a TokenGroup: channel j's entries
/// across tokens are contiguous at data[j*tokens ..].
struct ChannelGroupedBlock {
    size_t tokens = 0;
    size_t channels = 0;
    ValueBlock data;

    const FloatFormat& format() const { return data.format(); }
    bool operator==(const ChannelGroupedBlock&) const = default;
};

/// Per-channel base exponents beta_j, one byte each (exp_bits <= 8).
struct DeltaMeta {
    std::vector<uint8_t> base_exponents;

    size_t channels() const { return base_exponents.size(); }
    bool operator==(const DeltaMeta&) const = default;
};

/// Pure permutation: out[j*tokens + t] = in[t*channels + j].
ChannelGroupedBlock group_by_channel(const TokenGroup& group);

/// Inverse permutation back to the per-token layout.
TokenGroup ungroup(const ChannelGroupedBlock& block);

/// Replaces each word's exponent field with delta = raw_exponent - beta_j,
/// beta_j = per-channel minimum raw exponent. Sign and fraction bits are
/// untouched; deltas always fit the original E-bit field. NaN/Inf patterns
/// participate as plain unsigned fields.
std::pair<ChannelGroupedBlock, DeltaMeta> delta_forward(
    const ChannelGroupedBlock& block);

/// Restores exponents as (beta_j + delta) mod 2^E; exact inverse of
/// delta_forward on full-precision data.
ChannelGroupedBlock delta_inverse(const ChannelGroupedBlock& block,
                                  const DeltaMeta& meta);

/// Disaggregates the channel-major word sequence as one value block of
/// tokens*channels values; plane i is the concatenation of P_i over
/// channels in channel order.
BitPlaneMatrix kv_bitplane_concat(const ChannelGroupedBlock& block);

} // namespace bplc
