#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "bplc/float_format.hpp"

namespace bplc {

/// Bit-planes of a value block, most-significant plane first:
/// planes[0] holds bit n-1 (the sign for float formats), planes.back()
/// holds the lowest retained bit. Within a plane, value j maps to byte
/// j/8, bit j%8 (LSB-first). A truncated matrix keeps only the top
/// present_planes() planes.
struct BitPlaneMatrix {
    FloatFormat format;
    size_t count = 0;
    std::vector<std::vector<uint8_t>> planes;

    size_t present_planes() const { return planes.size(); }
    size_t plane_bytes() const { return (count + 7) / 8; }
    bool is_full() const { return planes.size() == format.total_bits(); }

    bool operator==(const BitPlaneMatrix&) const = default;
};

/// Slices a block into n full bit-planes (plane i bit j = bit i of word j).
BitPlaneMatrix disaggregate(const ValueBlock& block);

/// Inverse of disaggregate. Missing low planes reconstruct as zero bits
/// (truncation toward zero).
ValueBlock aggregate(const BitPlaneMatrix& matrix);

/// Keeps the top k planes, 1 <= k <= present_planes.
BitPlaneMatrix truncate_planes(const BitPlaneMatrix& matrix, size_t k);

/// Named precision schedule: maps labels like "FP8" to retained plane
/// counts per source format. Defaults follow a plane-count reading of
/// the usual precision ladder; callers may pass their own table.
using PrecisionTable = std::map<std::string, std::map<std::string, unsigned>>;

const PrecisionTable& default_precision_table();

/// Resolves a precision label for a format, e.g. ("bf16", "FP8") -> 8.
/// Returns nullopt for unknown labels.
std::optional<unsigned> resolve_precision(const FloatFormat& fmt,
                                          std::string_view label,
                                          const PrecisionTable& table =
                                              default_precision_table());

} // namespace bplc
