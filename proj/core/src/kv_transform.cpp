#include "bplc/kv_transform.hpp"

#include <algorithm>

#include "bplc/errors.hpp"

namespace bplc {

ChannelGroupedBlock group_by_channel(const TokenGroup& group) {
    ChannelGroupedBlock out{group.tokens, group.channels,
                            ValueBlock(group.format(), group.tokens * group.channels)};
    for (size_t t = 0; t < group.tokens; ++t)
        for (size_t j = 0; j < group.channels; ++j)
            out.data.set_word(j * group.tokens + t,
                              group.data.word(t * group.channels + j));
    return out;
}

TokenGroup ungroup(const ChannelGroupedBlock& block) {
    TokenGroup out{block.tokens, block.channels,
                   ValueBlock(block.format(), block.tokens * block.channels)};
    for (size_t j = 0; j < block.channels; ++j)
        for (size_t t = 0; t < block.tokens; ++t)
            out.data.set_word(t * block.channels + j,
                              block.data.word(j * block.tokens + t));
    return out;
}

std::pair<ChannelGroupedBlock, DeltaMeta> delta_forward(
    const ChannelGroupedBlock& block) {
    const FloatFormat& fmt = block.format();
    if (fmt.exp_bits < 1)
        throw FormatError("delta transform requires an exponent field, format " +
                          fmt.name);
    ChannelGroupedBlock out{block.tokens, block.channels, block.data};
    DeltaMeta meta;
    meta.base_exponents.resize(block.channels);
    const uint32_t exp_mask = fmt.exp_mask();
    const unsigned shift = fmt.frac_bits;
    for (size_t j = 0; j < block.channels; ++j) {
        uint32_t beta = exp_mask;
        for (size_t t = 0; t < block.tokens; ++t) {
            uint32_t e = (block.data.word(j * block.tokens + t) >> shift) & exp_mask;
            beta = std::min(beta, e);
        }
        meta.base_exponents[j] = static_cast<uint8_t>(beta);
        for (size_t t = 0; t < block.tokens; ++t) {
            size_t idx = j * block.tokens + t;
            uint32_t w = block.data.word(idx);
            uint32_t delta = ((w >> shift) & exp_mask) - beta;
            w = (w & ~(exp_mask << shift)) | (delta << shift);
            out.data.set_word(idx, w);
        }
    }
    return {std::move(out), std::move(meta)};
}

ChannelGroupedBlock delta_inverse(const ChannelGroupedBlock& block,
                                  const DeltaMeta& meta) {
    if (meta.channels() != block.channels)
        throw ArgumentError("delta meta has " + std::to_string(meta.channels()) +
                            " channels, block has " +
                            std::to_string(block.channels));
    const FloatFormat& fmt = block.format();
    if (fmt.exp_bits < 1)
        throw FormatError("delta transform requires an exponent field, format " +
                          fmt.name);
    ChannelGroupedBlock out{block.tokens, block.channels, block.data};
    const uint32_t exp_mask = fmt.exp_mask();
    const unsigned shift = fmt.frac_bits;
    for (size_t j = 0; j < block.channels; ++j) {
        uint32_t beta = meta.base_exponents[j];
        for (size_t t = 0; t < block.tokens; ++t) {
            size_t idx = j * block.tokens + t;
            uint32_t w = block.data.word(idx);
            uint32_t e = (((w >> shift) & exp_mask) + beta) & exp_mask;
            w = (w & ~(exp_mask << shift)) | (e << shift);
            out.data.set_word(idx, w);
        }
    }
    return out;
}

BitPlaneMatrix kv_bitplane_concat(const ChannelGroupedBlock& block) {
    return disaggregate(block.data);
}

} // namespace bplc
