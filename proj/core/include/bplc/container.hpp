#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bplc/codec.hpp"
#include "bplc/float_format.hpp"

namespace bplc {

/// How a tensor's words are arranged before compression.
///   weights: bit-plane disaggregation per superblock.
///   kv:      channel grouping + exponent delta + concatenated bit-planes,
///            one token group per superblock.
///   raw:     original byte layout chopped into plane-segment-sized blocks
///            (baseline measurement, no bit-plane transform).
enum class TensorLayout : uint8_t { weights = 0, kv = 1, raw = 2 };

std::string_view layout_name(TensorLayout layout);
TensorLayout layout_from_name(std::string_view name);

struct ManifestTensor {
    std::string name;
    std::string dtype;
    std::vector<uint64_t> shape;
    std::string path; // raw little-endian binary, relative to the manifest
    TensorLayout layout = TensorLayout::weights;
    uint16_t tokens_per_group = 0; // kv only; 0 = use writer setting
    uint32_t channels = 0;         // kv only

    uint64_t element_count() const;
};

struct TensorManifest {
    std::vector<ManifestTensor> tensors;
    std::filesystem::path base_dir; // resolves relative tensor paths

    static TensorManifest from_json_file(const std::filesystem::path& path);
    void to_json_file(const std::filesystem::path& path) const;
};

struct WriteSettings {
    CodecSettings codec;
    uint32_t superblock_values = 32768; // one of {8192, 16384, 32768, 65536}
    uint16_t group_tokens = 16;         // kv default, 1..1024
    std::optional<TensorLayout> layout_override;
};

/// Container format v1 ("BPLC"): fixed little-endian header, per-tensor
/// directory, then self-describing superblock records (see README).
inline constexpr char kContainerMagic[4] = {'B', 'P', 'L', 'C'};
inline constexpr uint16_t kContainerVersion = 1;

/// Writes a byte-deterministic container for all manifest tensors.
void write_container(const TensorManifest& manifest, const WriteSettings& settings,
                     const std::filesystem::path& out_path);

struct SuperblockStat {
    uint32_t value_count = 0;
    uint8_t plane_count = 0;
    uint32_t header_bytes = 0; // record header incl. length table
    uint32_t meta_bytes = 0;
    uint32_t plane_raw_bytes = 0;
    std::vector<uint32_t> plane_sizes; // stored, MSB-plane first
};

struct TensorStats {
    std::string name;
    FloatFormat format;
    TensorLayout layout = TensorLayout::weights;
    uint64_t element_count = 0;
    uint64_t raw_bytes = 0;    // packed original size
    uint64_t stored_bytes = 0; // sum of serialized superblock records
    // Aggregated over superblocks, MSB-plane first (empty for raw layout).
    std::vector<uint64_t> plane_raw_bytes;
    std::vector<uint64_t> plane_stored_bytes;
    std::vector<SuperblockStat> superblocks;

    double ratio() const { return compression_ratio(raw_bytes, stored_bytes); }
};

struct ContainerStats {
    Algo algo = Algo::none;
    uint32_t superblock_values = 0;
    std::vector<TensorStats> tensors;
};

class ContainerReader {
public:
    explicit ContainerReader(const std::filesystem::path& path);
    ~ContainerReader();
    ContainerReader(ContainerReader&&) noexcept;
    ContainerReader& operator=(ContainerReader&&) noexcept;

    std::vector<std::string> tensor_names() const;
    Algo algo() const;
    uint32_t superblock_values() const;

    struct ReadResult {
        ValueBlock data;
        uint64_t bytes_touched = 0;
    };

    /// Reconstructs a tensor. With `planes` = k, only the top k bit-planes
    /// of every superblock are fetched and the missing bits decode as
    /// zero. kv tensors come back in the original token-major layout.
    ReadResult read_tensor(const std::string& name,
                           std::optional<size_t> planes = std::nullopt);

    TensorStats stat_tensor(const std::string& name);
    ContainerStats stats();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace bplc
