#include "bplc/synth.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bplc/bitplane.hpp"
#include "bplc/errors.hpp"
#include "bplc/kv_transform.hpp"

namespace bplc {

namespace {

using json = nlohmann::json;

// Box-Muller over mt19937_64: identical streams on every platform,
// unlike std::normal_distribution.
class GaussianSource {
public:
    explicit GaussianSource(uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double uniform01() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    uint64_t raw() { return rng_(); }

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace

uint64_t derive_seed(uint64_t base_seed, uint64_t index) {
    // splitmix64 step over (seed, index).
    uint64_t z = base_seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

SynthSpec SynthSpec::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open synth spec " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ArgumentError("synth spec parse error: " + std::string(e.what()));
    }
    SynthSpec spec;
    spec.seed = doc.value("seed", 0ull);
    for (const auto& t : doc.at("tensors")) {
        SynthTensorSpec ts;
        ts.name = t.at("name").get<std::string>();
        ts.kind = t.at("kind").get<std::string>();
        ts.format = t.value("format", "bf16");
        ts.count = t.value("count", 0ull);
        ts.tokens = t.value("tokens", 0ull);
        ts.channels = t.value("channels", 0ull);
        ts.sigma = t.value("sigma", 0.05);
        ts.sigma_base = t.value("sigma_base", 1.0);
        ts.sigma_noise = t.value("sigma_noise", 0.01);
        ts.value = t.value("value", 1.0);
        ts.tokens_per_group = t.value("tokens_per_group", 16);
        spec.tensors.push_back(std::move(ts));
    }
    return spec;
}

ValueBlock generate_block(const SynthTensorSpec& spec, uint64_t seed) {
    const FloatFormat& fmt = find_format(spec.format);
    GaussianSource rng(seed);

    if (spec.kind == "gaussian_weights") {
        if (spec.count == 0 || fmt.is_integer())
            throw ArgumentError("gaussian_weights needs a float format and "
                                "count > 0");
        ValueBlock block(fmt, spec.count);
        for (uint64_t j = 0; j < spec.count; ++j)
            block.set_word(j, encode_nearest(rng.next() * spec.sigma, fmt));
        return block;
    }
    if (spec.kind == "channel_correlated_kv") {
        if (spec.tokens == 0 || spec.channels == 0 || fmt.is_integer())
            throw ArgumentError("channel_correlated_kv needs a float format, "
                                "tokens > 0 and channels > 0");
        // k_{t,j} = b_j * (1 + eps_{t,j}), token-major output.
        std::vector<double> base(spec.channels);
        for (auto& b : base)
            b = rng.next() * spec.sigma_base;
        ValueBlock block(fmt, spec.tokens * spec.channels);
        for (uint64_t t = 0; t < spec.tokens; ++t)
            for (uint64_t j = 0; j < spec.channels; ++j) {
                double eps = spec.sigma_noise == 0.0
                                 ? 0.0
                                 : rng.next() * spec.sigma_noise;
                block.set_word(t * spec.channels + j,
                               encode_nearest(base[j] * (1.0 + eps), fmt));
            }
        return block;
    }
    if (spec.kind == "uniform_random") {
        if (spec.count == 0)
            throw ArgumentError("uniform_random needs count > 0");
        ValueBlock block(fmt, spec.count);
        const uint32_t mask = fmt.word_mask();
        for (uint64_t j = 0; j < spec.count; ++j)
            block.set_word(j, static_cast<uint32_t>(rng.raw()) & mask);
        return block;
    }
    if (spec.kind == "constant") {
        if (spec.count == 0)
            throw ArgumentError("constant needs count > 0");
        uint32_t word = fmt.is_integer()
                            ? (static_cast<uint32_t>(spec.value) & fmt.word_mask())
                            : encode_nearest(spec.value, fmt);
        ValueBlock block(fmt, spec.count);
        for (uint64_t j = 0; j < spec.count; ++j)
            block.set_word(j, word);
        return block;
    }
    throw ArgumentError("unknown synth kind: " + spec.kind);
}

TensorManifest generate(const SynthSpec& spec,
                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    TensorManifest manifest;
    manifest.base_dir = out_dir;
    for (size_t i = 0; i < spec.tensors.size(); ++i) {
        const auto& ts = spec.tensors[i];
        ValueBlock block = generate_block(ts, derive_seed(spec.seed, i));

        std::string filename = ts.name + ".bin";
        std::ofstream out(out_dir / filename, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + (out_dir / filename).string());
        out.write(reinterpret_cast<const char*>(block.bytes().data()),
                  static_cast<std::streamsize>(block.bytes().size()));

        ManifestTensor mt;
        mt.name = ts.name;
        mt.dtype = ts.format;
        mt.path = filename;
        if (ts.kind == "channel_correlated_kv") {
            mt.shape = {ts.tokens, ts.channels};
            mt.layout = TensorLayout::kv;
            mt.tokens_per_group = ts.tokens_per_group;
            mt.channels = static_cast<uint32_t>(ts.channels);
        } else {
            mt.shape = {ts.element_count()};
            mt.layout = TensorLayout::weights;
        }
        manifest.tensors.push_back(std::move(mt));
    }
    manifest.to_json_file(out_dir / "manifest.json");
    return manifest;
}

double order0_byte_entropy_bytes(std::span<const uint8_t> bytes) {
    if (bytes.empty())
        return 0.0;
    std::array<uint64_t, 256> hist{};
    for (uint8_t b : bytes)
        ++hist[b];
    double total = static_cast<double>(bytes.size());
    double bits = 0.0;
    for (uint64_t c : hist)
        if (c) {
            double p = c / total;
            bits -= c * std::log2(p);
        }
    return bits / 8.0;
}

double order0_bit_entropy_bytes(std::span<const uint8_t> bits, size_t bit_count) {
    if (bit_count == 0)
        return 0.0;
    uint64_t ones = 0;
    size_t full = bit_count / 8;
    for (size_t i = 0; i < full; ++i)
        ones += std::popcount(bits[i]);
    for (size_t i = full * 8; i < bit_count; ++i)
        ones += (bits[i / 8] >> (i % 8)) & 1u;
    double p = static_cast<double>(ones) / static_cast<double>(bit_count);
    if (p == 0.0 || p == 1.0)
        return 0.0;
    double h = -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
    return h * static_cast<double>(bit_count) / 8.0;
}

EntropyReport entropy_oracle(const ValueBlock& block, EntropyLayout layout,
                             uint32_t superblock_values, uint16_t group_tokens,
                             uint64_t channels) {
    EntropyReport report;
    report.layout = layout;
    report.raw_bytes = block.bytes().size();
    const FloatFormat& fmt = block.format();
    const uint64_t total = block.count();

    auto add_segment = (+[](EntropyReport& r, std::string label,
                            uint64_t raw, double bound) {
        r.segments.push_back({std::move(label), raw, bound});
        r.bound_bytes += bound;
    });

    if (layout == EntropyLayout::byte_raw) {
        uint64_t seg_bytes = superblock_values / 8;
        const auto& bytes = block.bytes();
        for (uint64_t off = 0; off < bytes.size(); off += seg_bytes) {
            uint64_t n = std::min<uint64_t>(seg_bytes, bytes.size() - off);
            double bound = order0_byte_entropy_bytes(
                std::span(bytes.data() + off, n));
            add_segment(report, "byte_seg_" + std::to_string(off / seg_bytes), n,
                        bound);
        }
        return report;
    }

    auto plane_segments = [&](const ValueBlock& vb, const std::string& prefix) {
        BitPlaneMatrix mat = disaggregate(vb);
        for (size_t i = 0; i < mat.planes.size(); ++i) {
            double bound = order0_bit_entropy_bytes(mat.planes[i], mat.count);
            add_segment(report, prefix + "_plane_" + std::to_string(i),
                        mat.plane_bytes(), bound);
        }
    };

    if (layout == EntropyLayout::bit_plane) {
        for (uint64_t off = 0; off < total; off += superblock_values) {
            uint64_t cnt = std::min<uint64_t>(superblock_values, total - off);
            ValueBlock vb(fmt, cnt);
            for (uint64_t j = 0; j < cnt; ++j)
                vb.set_word(j, block.word(off + j));
            plane_segments(vb, "sb" + std::to_string(off / superblock_values));
        }
        return report;
    }

    // kv_clustered: group + delta + concatenated planes per token group.
    if (channels == 0 || total % channels != 0)
        throw ArgumentError("kv_clustered oracle needs a channel count "
                            "dividing the element count");
    uint64_t tokens = total / channels;
    for (uint64_t t0 = 0, g = 0; t0 < tokens; t0 += group_tokens, ++g) {
        uint64_t ntok = std::min<uint64_t>(group_tokens, tokens - t0);
        ValueBlock vb(fmt, ntok * channels);
        for (uint64_t j = 0; j < ntok * channels; ++j)
            vb.set_word(j, block.word(t0 * channels + j));
        TokenGroup tg{static_cast<size_t>(ntok), static_cast<size_t>(channels),
                      std::move(vb)};
        auto [delta, meta] = delta_forward(group_by_channel(tg));
        BitPlaneMatrix mat = kv_bitplane_concat(delta);
        for (size_t i = 0; i < mat.planes.size(); ++i) {
            double bound = order0_bit_entropy_bytes(mat.planes[i], mat.count);
            add_segment(report, "g" + std::to_string(g) + "_plane_" +
                                    std::to_string(i),
                        mat.plane_bytes(), bound);
        }
        // Base exponents travel uncompressed.
        report.bound_bytes += static_cast<double>(meta.base_exponents.size());
    }
    return report;
}

std::string EntropyReport::to_csv() const {
    std::ostringstream out;
    out << "schema_version,segment,raw_bytes,entropy_bound_bytes\n";
    for (const auto& s : segments)
        out << "1," << s.label << ',' << s.raw_bytes << ',' << s.bound_bytes
            << '\n';
    out << "1,TOTAL," << raw_bytes << ',' << bound_bytes << '\n';
    return out.str();
}

} // namespace bplc
