#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bplc/errors.hpp"

namespace bplc {

/// Bit-level layout of a fixed-width numeric word: [sign | exponent | fraction],
/// MSB to LSB. sign_bits is 1 for float formats and 0 for raw-integer formats.
struct FloatFormat {
    std::string name;
    uint8_t sign_bits = 1;
    uint8_t exp_bits = 0;
    uint8_t frac_bits = 0;
    int16_t bias = 0;

    uint8_t total_bits() const {
        return static_cast<uint8_t>(sign_bits + exp_bits + frac_bits);
    }
    bool is_integer() const { return exp_bits == 0; }
    uint32_t word_mask() const {
        return total_bits() >= 32 ? 0xFFFFFFFFu : ((1u << total_bits()) - 1u);
    }
    uint32_t exp_mask() const { return (1u << exp_bits) - 1u; }
    uint32_t frac_mask() const {
        return frac_bits >= 32 ? 0xFFFFFFFFu : ((1u << frac_bits) - 1u);
    }

    bool operator==(const FloatFormat&) const = default;
};

struct FieldSplit {
    uint8_t sign = 0;
    uint32_t exponent = 0;
    uint32_t fraction = 0;
};

/// Stable identifiers: "bf16", "fp16", "fp8e4m3", "fp8e5m2", "int8", "int4".
const FloatFormat& find_format(std::string_view name);
bool has_format(std::string_view name);

/// Registers a custom format (exp_bits <= 8, frac_bits <= 23, total <= 32).
/// Re-registering a builtin name is a FormatError.
void register_format(const FloatFormat& fmt);

FieldSplit split_fields(uint32_t word, const FloatFormat& fmt);
uint32_t join_fields(const FieldSplit& fields, const FloatFormat& fmt);

/// IEEE-like numeric decode, diagnostics only. Subnormals, Inf and NaN
/// follow the usual conventions. Integer formats are rejected.
double decode_value(uint32_t word, const FloatFormat& fmt);

/// Round-to-nearest-even encode; overflow saturates to the +-Inf pattern.
uint32_t encode_nearest(double value, const FloatFormat& fmt);

/// Block of `count` packed n-bit words. Word j occupies bit positions
/// [j*n, (j+1)*n) of the byte buffer, LSB-first within each byte, so
/// byte-width words land little-endian and 4-bit words pack two per
/// byte, low nibble first. Trailing pad bits are zero.
class ValueBlock {
public:
    ValueBlock(FloatFormat fmt, size_t count);
    static ValueBlock from_bytes(FloatFormat fmt, size_t count,
                                 std::span<const uint8_t> bytes);

    uint32_t word(size_t index) const;
    void set_word(size_t index, uint32_t value);

    const FloatFormat& format() const { return format_; }
    size_t count() const { return count_; }
    const std::vector<uint8_t>& bytes() const { return bytes_; }
    std::vector<uint8_t>& bytes() { return bytes_; }

    /// Packed size in bytes for `count` words of this format.
    static size_t packed_bytes(const FloatFormat& fmt, size_t count) {
        return (count * fmt.total_bits() + 7) / 8;
    }

    bool operator==(const ValueBlock&) const = default;

private:
    FloatFormat format_;
    size_t count_;
    std::vector<uint8_t> bytes_;
};

} // namespace bplc
