#include "bplc/codec.hpp"

#include <cstring>

#include "bplc/errors.hpp"
#include "compress_backend.hpp"

namespace bplc {

std::string_view algo_name(Algo algo) {
    switch (algo) {
        case Algo::none: return "none";
        case Algo::lz4: return "lz4";
        case Algo::zstd: return "zstd";
    }
    throw ArgumentError("invalid algo id " +
                        std::to_string(static_cast<unsigned>(algo)));
}

Algo algo_from_name(std::string_view name) {
    if (name == "none") return Algo::none;
    if (name == "lz4") return Algo::lz4;
    if (name == "zstd") return Algo::zstd;
    throw ArgumentError("unknown compression algo: " + std::string(name));
}

std::vector<uint8_t> compress_bytes(std::span<const uint8_t> src,
                                    const CodecSettings& settings) {
    if (settings.algo == Algo::none || src.empty())
        return {src.begin(), src.end()};

    std::vector<uint8_t> dst;
    size_t written = 0;
    if (settings.algo == Algo::lz4) {
        dst.resize(static_cast<size_t>(
            LZ4_compressBound(static_cast<int>(src.size()))));
        int n = LZ4_compress_default(reinterpret_cast<const char*>(src.data()),
                                     reinterpret_cast<char*>(dst.data()),
                                     static_cast<int>(src.size()),
                                     static_cast<int>(dst.size()));
        if (n <= 0)
            throw CodecError("lz4 compression failed");
        written = static_cast<size_t>(n);
    } else {
        dst.resize(ZSTD_compressBound(src.size()));
        size_t n = ZSTD_compress(dst.data(), dst.size(), src.data(), src.size(),
                                 settings.zstd_level);
        if (ZSTD_isError(n))
            throw CodecError("zstd compression failed");
        written = n;
    }
    if (written >= src.size()) // raw fallback
        return {src.begin(), src.end()};
    dst.resize(written);
    return dst;
}

std::vector<uint8_t> decompress_bytes(std::span<const uint8_t> src,
                                      size_t raw_size, Algo algo) {
    if (src.size() == raw_size) // stored raw (or algo none)
        return {src.begin(), src.end()};
    if (algo == Algo::none)
        throw IntegrityError("algo=none payload size mismatch");

    std::vector<uint8_t> dst(raw_size);
    if (algo == Algo::lz4) {
        int n = LZ4_decompress_safe(reinterpret_cast<const char*>(src.data()),
                                    reinterpret_cast<char*>(dst.data()),
                                    static_cast<int>(src.size()),
                                    static_cast<int>(dst.size()));
        if (n < 0 || static_cast<size_t>(n) != raw_size)
            throw IntegrityError("lz4 payload corrupt or wrong size");
    } else {
        size_t n = ZSTD_decompress(dst.data(), dst.size(), src.data(), src.size());
        if (ZSTD_isError(n) || n != raw_size)
            throw IntegrityError("zstd payload corrupt or wrong size");
    }
    return dst;
}

size_t CompressedSuperblock::payload_bytes() const {
    size_t total = 0;
    for (const auto& p : payloads)
        total += p.size();
    return total;
}

size_t CompressedSuperblock::prefix_bytes(size_t k) const {
    size_t total = header_bytes() + meta.size();
    for (size_t i = 0; i < k && i < payloads.size(); ++i)
        total += payloads[i].size();
    return total;
}

CompressedSuperblock compress_superblock(const BitPlaneMatrix& matrix,
                                         const CodecSettings& settings,
                                         const DeltaMeta* meta) {
    if (!matrix.is_full())
        throw ArgumentError("only full matrices are persisted; got " +
                            std::to_string(matrix.present_planes()) + " of " +
                            std::to_string(matrix.format.total_bits()) +
                            " planes");
    CompressedSuperblock sb;
    sb.format = matrix.format;
    sb.value_count = static_cast<uint32_t>(matrix.count);
    sb.plane_count = static_cast<uint8_t>(matrix.present_planes());
    sb.algo = settings.algo;
    sb.plane_raw_bytes = static_cast<uint32_t>(matrix.plane_bytes());
    if (meta)
        sb.meta = meta->base_exponents;
    sb.payloads.reserve(matrix.planes.size());
    for (size_t i = 0; i < matrix.planes.size(); ++i) {
        try {
            sb.payloads.push_back(compress_bytes(matrix.planes[i], settings));
        } catch (const CodecError& e) {
            throw CodecError(std::string(e.what()) + " (plane " +
                             std::to_string(i) + ")");
        }
    }
    return sb;
}

BitPlaneMatrix decompress_superblock(const CompressedSuperblock& sb,
                                     std::optional<size_t> k) {
    size_t planes = k.value_or(sb.plane_count);
    if (planes < 1 || planes > sb.plane_count)
        throw ArgumentError("plane count " + std::to_string(planes) +
                            " out of range [1, " +
                            std::to_string(sb.plane_count) + "]");
    BitPlaneMatrix mat;
    mat.format = sb.format;
    mat.count = sb.value_count;
    mat.planes.reserve(planes);
    for (size_t i = 0; i < planes; ++i) {
        try {
            mat.planes.push_back(
                decompress_bytes(sb.payloads[i], sb.plane_raw_bytes, sb.algo));
        } catch (const IntegrityError& e) {
            throw IntegrityError(std::string(e.what()) + " (plane " +
                                 std::to_string(i) + ")");
        }
    }
    return mat;
}

double compression_ratio(uint64_t s_orig, uint64_t s_comp) {
    if (s_comp == 0)
        throw ArgumentError("compressed size must be positive");
    return static_cast<double>(s_orig) / static_cast<double>(s_comp);
}

} // namespace bplc
