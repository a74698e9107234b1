#include "bplc/float_format.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>

namespace bplc {

namespace {

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::string, FloatFormat, std::less<>>& registry() {
    static std::map<std::string, FloatFormat, std::less<>> reg = [] {
        std::map<std::string, FloatFormat, std::less<>> r;
        auto add = [&r](const char* name, uint8_t s, uint8_t e, uint8_t f,
                        int16_t bias) {
            r.emplace(name, FloatFormat{name, s, e, f, bias});
        };
        add("bf16", 1, 8, 7, 127);
        add("fp16", 1, 5, 10, 15);
        add("fp8e4m3", 1, 4, 3, 7);
        add("fp8e5m2", 1, 5, 2, 15);
        add("int8", 0, 0, 8, 0);
        add("int4", 0, 0, 4, 0);
        return r;
    }();
    return reg;
}

bool is_builtin(std::string_view name) {
    return name == "bf16" || name == "fp16" || name == "fp8e4m3" ||
           name == "fp8e5m2" || name == "int8" || name == "int4";
}

} // namespace

const FloatFormat& find_format(std::string_view name) {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end())
        throw FormatError("unknown format: " + std::string(name));
    return it->second;
}

bool has_format(std::string_view name) {
    std::lock_guard lock(registry_mutex());
    return registry().count(name) != 0;
}

void register_format(const FloatFormat& fmt) {
    if (fmt.name.empty())
        throw FormatError("format name must not be empty");
    if (is_builtin(fmt.name))
        throw FormatError("cannot re-register builtin format: " + fmt.name);
    if (fmt.sign_bits > 1 || fmt.exp_bits > 8 || fmt.frac_bits > 23)
        throw FormatError("custom format fields out of range: " + fmt.name);
    if (fmt.total_bits() == 0 || fmt.total_bits() > 32)
        throw FormatError("custom format width out of range: " + fmt.name);
    std::lock_guard lock(registry_mutex());
    registry()[fmt.name] = fmt;
}

FieldSplit split_fields(uint32_t word, const FloatFormat& fmt) {
    if (fmt.total_bits() < 32 && (word >> fmt.total_bits()) != 0)
        throw FormatError("word wider than format " + fmt.name);
    FieldSplit out;
    out.fraction = word & fmt.frac_mask();
    out.exponent = (word >> fmt.frac_bits) & fmt.exp_mask();
    out.sign = fmt.sign_bits
                   ? static_cast<uint8_t>((word >> (fmt.exp_bits + fmt.frac_bits)) & 1u)
                   : 0;
    return out;
}

uint32_t join_fields(const FieldSplit& fields, const FloatFormat& fmt) {
    uint32_t word = fields.fraction & fmt.frac_mask();
    word |= (fields.exponent & fmt.exp_mask()) << fmt.frac_bits;
    if (fmt.sign_bits)
        word |= static_cast<uint32_t>(fields.sign & 1u)
                << (fmt.exp_bits + fmt.frac_bits);
    return word;
}

double decode_value(uint32_t word, const FloatFormat& fmt) {
    if (fmt.is_integer())
        throw FormatError("decode_value requires a float format, got " + fmt.name);
    FieldSplit f = split_fields(word, fmt);
    double sign = f.sign ? -1.0 : 1.0;
    double frac_scale = std::ldexp(1.0, -static_cast<int>(fmt.frac_bits));
    if (f.exponent == fmt.exp_mask()) {
        if (f.fraction == 0)
            return sign * std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (f.exponent == 0) {
        // Subnormal: 2^(1-bias) * frac/2^F.
        return sign * std::ldexp(static_cast<double>(f.fraction) * frac_scale,
                                 1 - fmt.bias);
    }
    double mant = 1.0 + static_cast<double>(f.fraction) * frac_scale;
    return sign * std::ldexp(mant, static_cast<int>(f.exponent) - fmt.bias);
}

uint32_t encode_nearest(double value, const FloatFormat& fmt) {
    if (fmt.is_integer())
        throw FormatError("encode_nearest requires a float format, got " + fmt.name);
    FieldSplit f;
    f.sign = std::signbit(value) ? 1 : 0;
    uint32_t inf_word = join_fields({f.sign, fmt.exp_mask(), 0}, fmt);
    if (std::isnan(value))
        return join_fields({f.sign, fmt.exp_mask(), 1u}, fmt);
    if (std::isinf(value))
        return inf_word;
    double mag = std::fabs(value);
    if (mag == 0.0)
        return join_fields({f.sign, 0, 0}, fmt);

    int exp2 = 0;
    std::frexp(mag, &exp2); // mag = m * 2^exp2, m in [0.5, 1)
    int biased = exp2 - 1 + fmt.bias;
    uint32_t frac_units = 1u << fmt.frac_bits;

    if (biased <= 0) {
        // Subnormal candidate: round mag / 2^(1-bias) * 2^F to nearest even.
        double scaled = std::ldexp(mag, fmt.bias - 1 + fmt.frac_bits);
        double r = std::nearbyint(scaled);
        auto frac = static_cast<uint64_t>(r);
        if (frac >= frac_units) // rounded up into the smallest normal
            return join_fields({f.sign, 1, 0}, fmt);
        return join_fields({f.sign, 0, static_cast<uint32_t>(frac)}, fmt);
    }

    // Normal: mag = 1.f * 2^(biased-bias); round f*2^F to nearest even.
    double scaled = std::ldexp(mag, fmt.bias - biased + fmt.frac_bits);
    double r = std::nearbyint(scaled); // in [2^F, 2^(F+1)]
    auto mant = static_cast<uint64_t>(r);
    if (mant >= 2 * frac_units) {
        mant = frac_units;
        ++biased;
    }
    if (static_cast<uint32_t>(biased) >= fmt.exp_mask())
        return inf_word; // saturate
    return join_fields({f.sign, static_cast<uint32_t>(biased),
                        static_cast<uint32_t>(mant - frac_units)},
                       fmt);
}

ValueBlock::ValueBlock(FloatFormat fmt, size_t count)
    : format_(std::move(fmt)),
      count_(count),
      bytes_(packed_bytes(format_, count), 0) {}

ValueBlock ValueBlock::from_bytes(FloatFormat fmt, size_t count,
                                  std::span<const uint8_t> bytes) {
    ValueBlock vb(std::move(fmt), count);
    if (bytes.size() != vb.bytes_.size())
        throw ArgumentError("packed byte length mismatch: expected " +
                            std::to_string(vb.bytes_.size()) + ", got " +
                            std::to_string(bytes.size()));
    std::memcpy(vb.bytes_.data(), bytes.data(), bytes.size());
    return vb;
}

uint32_t ValueBlock::word(size_t index) const {
    const unsigned n = format_.total_bits();
    size_t bitpos = index * n;
    // Words never straddle more than 5 bytes for n <= 32.
    uint64_t acc = 0;
    size_t byte = bitpos / 8;
    unsigned shift = bitpos % 8;
    unsigned got = 0;
    while (got < shift + n) {
        acc |= static_cast<uint64_t>(bytes_[byte]) << got;
        got += 8;
        ++byte;
    }
    return static_cast<uint32_t>((acc >> shift) & format_.word_mask());
}

void ValueBlock::set_word(size_t index, uint32_t value) {
    const unsigned n = format_.total_bits();
    value &= format_.word_mask();
    size_t bitpos = index * n;
    size_t byte = bitpos / 8;
    unsigned shift = bitpos % 8;
    uint64_t mask = static_cast<uint64_t>(format_.word_mask()) << shift;
    uint64_t val = static_cast<uint64_t>(value) << shift;
    for (unsigned placed = 0; placed < shift + n; placed += 8, ++byte) {
        uint8_t m = static_cast<uint8_t>(mask >> placed);
        bytes_[byte] = static_cast<uint8_t>((bytes_[byte] & ~m) |
                                            (static_cast<uint8_t>(val >> placed) & m));
    }
}

} // namespace bplc
