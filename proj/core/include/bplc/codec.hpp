#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bplc/bitplane.hpp"
#include "bplc/kv_transform.hpp"

namespace bplc {

/// Wire-stable compression algorithm identifiers.
enum class Algo : uint8_t { none = 0, lz4 = 1, zstd = 2 };

std::string_view algo_name(Algo algo);
Algo algo_from_name(std::string_view name);

struct CodecSettings {
    Algo algo = Algo::zstd;
    int zstd_level = 3;
};

/// Per-plane independently compressed superblock. A plane whose stored
/// size equals its raw size is stored uncompressed (raw fallback).
struct CompressedSuperblock {
    FloatFormat format;
    uint32_t value_count = 0;
    uint8_t plane_count = 0;
    Algo algo = Algo::none;
    /// Raw (decompressed) size of each plane payload in bytes.
    uint32_t plane_raw_bytes = 0;
    /// Serialized DeltaMeta (one base exponent byte per channel); empty
    /// when no delta transform was applied.
    std::vector<uint8_t> meta;
    /// MSB-plane first.
    std::vector<std::vector<uint8_t>> payloads;

    /// Record header bytes: value_count + plane_count + meta_len + length table.
    size_t header_bytes() const { return 4 + 1 + 4 + 4 * size_t(plane_count); }
    size_t payload_bytes() const;
    /// Full serialized size S_comp (header + meta + payloads).
    size_t serialized_size() const {
        return header_bytes() + meta.size() + payload_bytes();
    }
    /// Serialized bytes touched when fetching only the top k planes.
    size_t prefix_bytes(size_t k) const;
};

/// Compresses each plane independently; output decompresses bit-exact.
/// The matrix must be full (present_planes == n).
CompressedSuperblock compress_superblock(const BitPlaneMatrix& matrix,
                                         const CodecSettings& settings,
                                         const DeltaMeta* meta = nullptr);

/// Decompresses the top k planes (default: all). Corrupt payloads raise
/// IntegrityError naming the plane.
BitPlaneMatrix decompress_superblock(const CompressedSuperblock& sb,
                                     std::optional<size_t> k = std::nullopt);

/// S_orig / S_comp (>= 1 for anything useful); footprint reduction is
/// 1 - 1/ratio.
double compression_ratio(uint64_t s_orig, uint64_t s_comp);

/// One compressed buffer with raw fallback: result.size() == src.size()
/// means the data is stored raw.
std::vector<uint8_t> compress_bytes(std::span<const uint8_t> src,
                                    const CodecSettings& settings);

/// Inverse of compress_bytes; `raw_size` is the expected decompressed size.
std::vector<uint8_t> decompress_bytes(std::span<const uint8_t> src,
                                      size_t raw_size, Algo algo);

} // namespace bplc
