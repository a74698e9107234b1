#include "bplc/bitplane.hpp"

#include <algorithm>
#include <cstring>

#include "bplc/errors.hpp"

namespace bplc {

namespace {

// Gathers bit `bit` of eight consecutive words into one plane byte.
inline uint8_t gather8(const uint32_t* w, unsigned bit) {
    return static_cast<uint8_t>(((w[0] >> bit) & 1u) | (((w[1] >> bit) & 1u) << 1) |
                                (((w[2] >> bit) & 1u) << 2) |
                                (((w[3] >> bit) & 1u) << 3) |
                                (((w[4] >> bit) & 1u) << 4) |
                                (((w[5] >> bit) & 1u) << 5) |
                                (((w[6] >> bit) & 1u) << 6) |
                                (((w[7] >> bit) & 1u) << 7));
}

inline void load_words(const ValueBlock& block, size_t base, size_t n,
                       uint32_t* out) {
    const unsigned bits = block.format().total_bits();
    if (bits == 16) {
        const uint8_t* p = block.bytes().data() + base * 2;
        for (size_t j = 0; j < n; ++j)
            out[j] = static_cast<uint32_t>(p[2 * j]) |
                     (static_cast<uint32_t>(p[2 * j + 1]) << 8);
    } else if (bits == 8) {
        const uint8_t* p = block.bytes().data() + base;
        for (size_t j = 0; j < n; ++j)
            out[j] = p[j];
    } else {
        for (size_t j = 0; j < n; ++j)
            out[j] = block.word(base + j);
    }
}

} // namespace

BitPlaneMatrix disaggregate(const ValueBlock& block) {
    const unsigned n = block.format().total_bits();
    const size_t m = block.count();
    BitPlaneMatrix mat;
    mat.format = block.format();
    mat.count = m;
    mat.planes.assign(n, std::vector<uint8_t>((m + 7) / 8, 0));

    uint32_t w[8];
    size_t base = 0;
    for (; base + 8 <= m; base += 8) {
        load_words(block, base, 8, w);
        const size_t byte = base / 8;
        for (unsigned i = 0; i < n; ++i)
            mat.planes[n - 1 - i][byte] = gather8(w, i);
    }
    if (base < m) {
        const size_t rem = m - base;
        load_words(block, base, rem, w);
        const size_t byte = base / 8;
        for (unsigned i = 0; i < n; ++i) {
            uint8_t acc = 0;
            for (size_t j = 0; j < rem; ++j)
                acc |= static_cast<uint8_t>(((w[j] >> i) & 1u) << j);
            mat.planes[n - 1 - i][byte] = acc;
        }
    }
    return mat;
}

ValueBlock aggregate(const BitPlaneMatrix& matrix) {
    const unsigned n = matrix.format.total_bits();
    const size_t m = matrix.count;
    const size_t k = matrix.present_planes();
    if (k > n)
        throw ArgumentError("matrix has more planes than format bits");
    ValueBlock block(matrix.format, m);

    const unsigned fast16 = (n == 16);
    const unsigned fast8 = (n == 8);
    uint32_t w[8];
    for (size_t base = 0; base < m; base += 8) {
        const size_t cnt = std::min<size_t>(8, m - base);
        const size_t byte = base / 8;
        std::memset(w, 0, sizeof(w));
        for (size_t p = 0; p < k; ++p) {
            const unsigned bit = n - 1 - static_cast<unsigned>(p);
            uint8_t pb = matrix.planes[p][byte];
            for (size_t j = 0; j < cnt; ++j)
                w[j] |= static_cast<uint32_t>((pb >> j) & 1u) << bit;
        }
        if (fast16) {
            uint8_t* out = block.bytes().data() + base * 2;
            for (size_t j = 0; j < cnt; ++j) {
                out[2 * j] = static_cast<uint8_t>(w[j]);
                out[2 * j + 1] = static_cast<uint8_t>(w[j] >> 8);
            }
        } else if (fast8) {
            uint8_t* out = block.bytes().data() + base;
            for (size_t j = 0; j < cnt; ++j)
                out[j] = static_cast<uint8_t>(w[j]);
        } else {
            for (size_t j = 0; j < cnt; ++j)
                block.set_word(base + j, w[j]);
        }
    }
    return block;
}

BitPlaneMatrix truncate_planes(const BitPlaneMatrix& matrix, size_t k) {
    if (k < 1 || k > matrix.present_planes())
        throw ArgumentError("plane count " + std::to_string(k) +
                            " out of range [1, " +
                            std::to_string(matrix.present_planes()) + "]");
    BitPlaneMatrix out;
    out.format = matrix.format;
    out.count = matrix.count;
    out.planes.assign(matrix.planes.begin(), matrix.planes.begin() + k);
    return out;
}

const PrecisionTable& default_precision_table() {
    static const PrecisionTable table = {
        {"bf16",
         {{"BF16", 16}, {"FP12", 12}, {"FP8", 8}, {"FP6", 6}, {"FP4", 4}}},
        {"fp16",
         {{"FP16", 16}, {"FP12", 12}, {"FP8", 8}, {"FP6", 6}, {"FP4", 4}}},
        {"fp8e4m3", {{"FP8", 8}, {"FP6", 6}, {"FP4", 4}}},
        {"fp8e5m2", {{"FP8", 8}, {"FP6", 6}, {"FP4", 4}}},
        {"int8", {{"INT8", 8}, {"INT4", 4}, {"INT2", 2}}},
        {"int4", {{"INT4", 4}, {"INT2", 2}}},
    };
    return table;
}

std::optional<unsigned> resolve_precision(const FloatFormat& fmt,
                                          std::string_view label,
                                          const PrecisionTable& table) {
    auto fit = table.find(fmt.name);
    if (fit == table.end())
        return std::nullopt;
    auto pit = fit->second.find(std::string(label));
    if (pit == fit->second.end())
        return std::nullopt;
    return pit->second;
}

} // namespace bplc
