#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bplc/container.hpp"
#include "bplc/float_format.hpp"

namespace bplc {

/// One synthetic tensor. Gaussian draws use Box-Muller over mt19937_64
/// so output is reproducible for a fixed seed.
struct SynthTensorSpec {
    std::string name;
    std::string kind; // gaussian_weights | channel_correlated_kv |
                      // uniform_random | constant
    std::string format = "bf16";
    uint64_t count = 0;    // gaussian_weights / uniform_random / constant
    uint64_t tokens = 0;   // channel_correlated_kv
    uint64_t channels = 0; // channel_correlated_kv
    double sigma = 0.05;       // gaussian_weights
    double sigma_base = 1.0;   // kv per-channel base scale
    double sigma_noise = 0.01; // kv per-token relative noise
    double value = 1.0;        // constant
    uint16_t tokens_per_group = 16;

    uint64_t element_count() const {
        return kind == "channel_correlated_kv" ? tokens * channels : count;
    }
};

struct SynthSpec {
    uint64_t seed = 0;
    std::vector<SynthTensorSpec> tensors;

    static SynthSpec from_json_file(const std::filesystem::path& path);
};

/// In-memory generation; `seed` is the already-derived per-tensor seed.
ValueBlock generate_block(const SynthTensorSpec& spec, uint64_t seed);

/// Per-tensor seed derived from the spec seed and the tensor index.
uint64_t derive_seed(uint64_t base_seed, uint64_t index);

/// Writes <name>.bin per tensor plus manifest.json into out_dir.
TensorManifest generate(const SynthSpec& spec,
                        const std::filesystem::path& out_dir);

/// Segmentation layouts for the entropy oracle.
enum class EntropyLayout { byte_raw, bit_plane, kv_clustered };

struct EntropySegment {
    std::string label;
    uint64_t raw_bytes = 0;
    double bound_bytes = 0; // order-0 entropy lower bound
};

struct EntropyReport {
    EntropyLayout layout;
    uint64_t raw_bytes = 0;
    double bound_bytes = 0;
    std::vector<EntropySegment> segments;

    double bound_ratio() const { return raw_bytes / bound_bytes; }
    std::string to_csv() const;
};

/// Order-0 Shannon bound in bytes for a byte sequence.
double order0_byte_entropy_bytes(std::span<const uint8_t> bytes);

/// Order-0 bound for a packed bit vector (per-bit entropy).
double order0_bit_entropy_bytes(std::span<const uint8_t> bits, size_t bit_count);

/// Independent lower bound on compressed size under the given layout,
/// segmented exactly like the codec (one segment per plane of each
/// superblock; byte_raw uses plane-segment-sized byte blocks). Used to
/// calibrate acceptance thresholds before trusting codec numbers.
EntropyReport entropy_oracle(const ValueBlock& block, EntropyLayout layout,
                             uint32_t superblock_values = 32768,
                             uint16_t group_tokens = 16, uint64_t channels = 0);

} // namespace bplc
