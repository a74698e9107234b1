#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bplc/container.hpp"

namespace bplc {

/// DRAM topology and cost constants. Energy numbers are configuration
/// placeholders, not measured values; override them for real studies.
struct DramConfig {
    double channels = 4;
    double per_channel_bandwidth = 38.4e9; // bytes/s, DDR5-4800 x64
    uint64_t row_buffer_bytes = 8192;
    double energy_read_per_bit = 5e-12;  // J/bit
    double energy_activate = 2e-9;       // J/activation
    double fixed_latency = 1e-7;         // s

    void validate() const;
    static DramConfig from_json_file(const std::filesystem::path& path);
};

/// One schedule rule: tensors matching `pattern` ('*' and '?' wildcards)
/// are fetched at `planes` top bit-planes, or at the plane count a named
/// precision label resolves to for the tensor's format.
struct ScheduleRule {
    std::string pattern;
    std::string precision; // e.g. "FP8"; empty when planes is set
    int planes = -1;       // -1: use precision label; 0: full precision
};

struct PrecisionSchedule {
    std::vector<ScheduleRule> rules; // first match wins
    ScheduleRule fallback{"*", "", 0};

    static PrecisionSchedule from_json_file(const std::filesystem::path& path);

    /// Plane count for a tensor, clamped semantics: 0/full -> n.
    size_t resolve(const std::string& tensor_name, const FloatFormat& fmt) const;
};

struct TensorAccess {
    std::string name;
    size_t planes = 0;
    uint64_t bytes_fetched = 0;
    uint64_t activations = 0;
    double energy_joules = 0;
    double latency_seconds = 0;
    std::vector<uint64_t> plane_bytes; // per fetched plane, MSB first
};

struct AccessReport {
    std::string layout_label; // "bitplane" or "bytelevel"
    uint64_t bytes_fetched = 0;
    uint64_t activations = 0;
    double energy_joules = 0;
    double latency_seconds = 0;
    std::vector<TensorAccess> tensors;

    std::string to_json() const;
    std::string to_csv() const;
};

/// Traffic/energy/latency for fetching the scheduled plane prefix of
/// every tensor from the compressed bit-plane container:
///   bytes   = sum over superblocks of header + meta + top-k stored planes
///   acts    = sum of ceil(run_bytes / row_buffer) per contiguous fetch run
///   energy  = bytes*8*energy_read_per_bit + acts*energy_activate
///   latency = bytes / (channels * per_channel_bandwidth) + fixed_latency
AccessReport estimate_access(const ContainerStats& stats,
                             const PrecisionSchedule& schedule,
                             const DramConfig& config);

/// Same schedule under the traditional byte-interleaved uncompressed
/// layout: every word is fetched in full unless the truncation boundary
/// is byte-aligned within the word, in which case whole trailing bytes
/// are skipped. Returns {bit-plane report, byte-level report}.
std::pair<AccessReport, AccessReport> compare_layouts(
    const ContainerStats& stats, const PrecisionSchedule& schedule,
    const DramConfig& config);

/// Shell-style wildcard match ('*', '?').
bool pattern_match(std::string_view pattern, std::string_view text);

} // namespace bplc
