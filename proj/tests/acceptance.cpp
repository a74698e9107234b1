// End-to-end acceptance suite. Each criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any hard criterion fails.
// Criterion 12 is a throughput report: a miss prints FLAG and is not
// treated as a failure.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bplc/bitplane.hpp"
#include "bplc/codec.hpp"
#include "bplc/container.hpp"
#include "bplc/costmodel.hpp"
#include "bplc/kv_transform.hpp"
#include "bplc/synth.hpp"
#include "test_helpers.hpp"

using namespace bplc;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int num, bool ok, const std::string& what) {
    std::printf("[%s] %2d %s\n", ok ? "PASS" : "FAIL", num, what.c_str());
    if (!ok)
        ++g_failures;
}

std::vector<uint8_t> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string hex(const uint8_t* data, size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

// --- criterion 1: weights-path lossless roundtrip -------------------------

bool weights_roundtrip() {
    const CodecSettings settings[] = {{Algo::none, 3}, {Algo::lz4, 3},
                                      {Algo::zstd, 3}};
    for (const auto& fmt : testing::builtin_formats()) {
        std::mt19937_64 rng(0xC0DEC0 + fmt.total_bits());
        for (int i = 0; i < 10000; ++i) {
            size_t count = 1 + rng() % 2048;
            auto block = testing::random_block(fmt, count, rng);
            auto sb = compress_superblock(disaggregate(block), settings[i % 3]);
            if (!(aggregate(decompress_superblock(sb)) == block))
                return false;
        }
    }
    return true;
}

// --- criteria 2 and 4: KV-path roundtrip and delta bounds -----------------

struct KvResult {
    bool lossless = true;
    uint64_t out_of_range = 0;
};

KvResult kv_roundtrip() {
    KvResult res;
    std::mt19937_64 rng(0xCAFE);
    auto formats = testing::builtin_float_formats();
    for (int trial = 0; trial < 1000; ++trial) {
        const auto& fmt = formats[trial % formats.size()];
        size_t tokens = 1 + rng() % 64, channels = 1 + rng() % 32;
        TokenGroup g{tokens, channels,
                     testing::random_block_with_specials(fmt, tokens * channels,
                                                         rng)};
        auto grouped = group_by_channel(g);
        auto [delta, meta] = delta_forward(grouped);

        // Delta bound audit against the raw exponent fields.
        const int64_t field_max = (int64_t{1} << fmt.exp_bits) - 1;
        for (size_t j = 0; j < channels; ++j) {
            for (size_t t = 0; t < tokens; ++t) {
                size_t idx = j * tokens + t;
                int64_t raw =
                    split_fields(grouped.data.word(idx), fmt).exponent;
                int64_t d = raw - int64_t{meta.base_exponents[j]};
                if (d < 0 || d > field_max)
                    ++res.out_of_range;
                if (int64_t(split_fields(delta.data.word(idx), fmt).exponent) !=
                    d)
                    ++res.out_of_range;
            }
        }

        auto sb = compress_superblock(kv_bitplane_concat(delta),
                                      {trial % 2 ? Algo::zstd : Algo::lz4, 3});
        ChannelGroupedBlock back{tokens, channels,
                                 aggregate(decompress_superblock(sb))};
        if (!(ungroup(delta_inverse(back, meta)) == g))
            res.lossless = false;
    }
    return res;
}

// --- criterion 3: prefix reads equal the bit-mask oracle ------------------

bool truncation_oracle(const fs::path& dir) {
    std::mt19937_64 rng(0x7A11);
    for (const auto& fmt : testing::builtin_formats()) {
        auto block = testing::random_block(fmt, 70000, rng);
        TensorManifest manifest;
        manifest.base_dir = dir;
        {
            std::ofstream out(dir / "t.bin", std::ios::binary);
            out.write(reinterpret_cast<const char*>(block.bytes().data()),
                      static_cast<std::streamsize>(block.bytes().size()));
        }
        manifest.tensors = {{"t", std::string(fmt.name), {70000}, "t.bin",
                             TensorLayout::weights, 0, 0}};
        write_container(manifest, {{Algo::zstd, 3}, 32768, 16, {}},
                        dir / "t.bplc");
        ContainerReader reader(dir / "t.bplc");
        for (unsigned k = 1; k <= fmt.total_bits(); ++k) {
            auto got = reader.read_tensor("t", k);
            if (!(got.data == testing::mask_to_top_bits(block, k)))
                return false;
        }
    }
    return true;
}

// --- shared fixtures for criteria 5-9 and 11 -------------------------------

struct WeightsFixture {
    fs::path bitplane, raw;
    double ratio_bitplane = 0, ratio_raw = 0, oracle_ratio = 0;
};

WeightsFixture build_weights_fixture(const fs::path& dir, const char* tag) {
    SynthSpec spec;
    spec.seed = 1234;
    SynthTensorSpec t;
    t.name = "w";
    t.kind = "gaussian_weights";
    t.format = "bf16";
    t.count = uint64_t{1} << 22;
    t.sigma = 0.05;
    spec.tensors = {t};
    auto data_dir = dir / (std::string("wdata_") + tag);
    auto manifest = generate(spec, data_dir);

    WeightsFixture fx;
    fx.bitplane = dir / (std::string("w_bitplane_") + tag + ".bplc");
    fx.raw = dir / (std::string("w_raw_") + tag + ".bplc");
    write_container(manifest, {{Algo::zstd, 3}, 32768, 16, {}}, fx.bitplane);
    write_container(manifest,
                    {{Algo::zstd, 3}, 32768, 16, TensorLayout::raw}, fx.raw);
    fx.ratio_bitplane = ContainerReader(fx.bitplane).stats().tensors[0].ratio();
    fx.ratio_raw = ContainerReader(fx.raw).stats().tensors[0].ratio();

    auto block = generate_block(t, derive_seed(spec.seed, 0));
    fx.oracle_ratio =
        entropy_oracle(block, EntropyLayout::bit_plane).bound_ratio();
    return fx;
}

struct KvFixture {
    double ratio_kv = 0, ratio_raw = 0, ratio_unclustered = 0;
    std::vector<uint8_t> kv_bytes;
};

KvFixture build_kv_fixture(const fs::path& dir, const char* tag) {
    SynthSpec spec;
    spec.seed = 5678;
    SynthTensorSpec t;
    t.name = "kv";
    t.kind = "channel_correlated_kv";
    t.format = "bf16";
    t.tokens = 4096;
    t.channels = 2048;
    t.sigma_noise = 0.01;
    t.tokens_per_group = 16;
    spec.tensors = {t};
    auto manifest = generate(spec, dir / (std::string("kvdata_") + tag));

    auto kv_path = dir / (std::string("kv_") + tag + ".bplc");
    auto raw_path = dir / (std::string("kv_raw_") + tag + ".bplc");
    auto flat_path = dir / (std::string("kv_flat_") + tag + ".bplc");
    WriteSettings settings{{Algo::zstd, 3}, 32768, 16, {}};
    write_container(manifest, settings, kv_path);
    settings.layout_override = TensorLayout::raw;
    write_container(manifest, settings, raw_path);
    settings.layout_override = TensorLayout::weights; // planes, no clustering
    write_container(manifest, settings, flat_path);

    KvFixture fx;
    fx.ratio_kv = ContainerReader(kv_path).stats().tensors[0].ratio();
    fx.ratio_raw = ContainerReader(raw_path).stats().tensors[0].ratio();
    fx.ratio_unclustered = ContainerReader(flat_path).stats().tensors[0].ratio();
    fx.kv_bytes = read_file(kv_path);
    return fx;
}

// --- criterion 7: exponent planes compress far better than mantissa -------

bool plane_structure(const fs::path& container) {
    auto stats = ContainerReader(container).stats().tensors[0];
    auto plane_ratio = [&](size_t i) {
        return static_cast<double>(stats.plane_raw_bytes[i]) /
               static_cast<double>(stats.plane_stored_bytes[i]);
    };
    double exp_mean = 0, frac_mean = 0;
    for (size_t i = 1; i <= 8; ++i)
        exp_mean += plane_ratio(i) / 8.0;
    for (size_t i = 9; i < 16; ++i)
        frac_mean += plane_ratio(i) / 7.0;
    return exp_mean >= 3.0 * frac_mean;
}

// --- criterion 8: traffic proportionality with algo=none ------------------

bool traffic_proportionality(const fs::path& dir) {
    SynthSpec spec;
    spec.seed = 99;
    SynthTensorSpec t;
    t.name = "w";
    t.kind = "uniform_random";
    t.format = "bf16";
    t.count = 1 << 20;
    spec.tensors = {t};
    auto manifest = generate(spec, dir / "propdata");
    auto path = dir / "prop.bplc";
    write_container(manifest, {{Algo::none, 3}, 32768, 16, {}}, path);

    ContainerReader reader(path);
    auto stats = reader.stats();
    auto schedule = [](int k) {
        PrecisionSchedule s;
        s.fallback = {"*", "", k};
        return s;
    };
    auto full = estimate_access(stats, schedule(16), DramConfig{});
    auto half = estimate_access(stats, schedule(8), DramConfig{});
    double frac = static_cast<double>(half.bytes_fetched) /
                  static_cast<double>(full.bytes_fetched);
    if (frac < 0.49 || frac > 0.51)
        return false;
    // Accounting identity against the container's own byte counter.
    for (int k : {4, 8, 16}) {
        auto est = estimate_access(stats, schedule(k), DramConfig{});
        if (est.bytes_fetched != reader.read_tensor("w", k).bytes_touched)
            return false;
    }
    return true;
}

// --- criterion 9: bit-plane layout dominates byte-level under FP8 ---------

std::string cost_report_string(const fs::path& container) {
    auto stats = ContainerReader(container).stats();
    PrecisionSchedule fp8;
    fp8.fallback = {"*", "FP8", -1};
    auto [bp, bl] = compare_layouts(stats, fp8, DramConfig{});
    return bp.to_json() + bl.to_json();
}

bool cost_ordering(const fs::path& container) {
    auto stats = ContainerReader(container).stats();
    PrecisionSchedule fp8;
    fp8.fallback = {"*", "FP8", -1};
    auto [bp, bl] = compare_layouts(stats, fp8, DramConfig{});
    if (!(bp.bytes_fetched < bl.bytes_fetched &&
          bp.energy_joules < bl.energy_joules &&
          bp.latency_seconds < bl.latency_seconds))
        return false;

    uint64_t prev_bytes = 0;
    double prev_energy = -1, prev_latency = -1;
    for (int k : {4, 6, 8, 12, 16}) {
        PrecisionSchedule s;
        s.fallback = {"*", "", k};
        auto r = estimate_access(stats, s, DramConfig{});
        if (r.bytes_fetched < prev_bytes || r.energy_joules < prev_energy ||
            r.latency_seconds < prev_latency)
            return false;
        prev_bytes = r.bytes_fetched;
        prev_energy = r.energy_joules;
        prev_latency = r.latency_seconds;
    }
    return true;
}

// --- criterion 10: frozen container prefix --------------------------------

const char* kGoldenPrefix =
    "42504c4301000000000300800000020000000500616c70686101004000000000"
    "0000000100000051000000000000000400626574610101000100000000000010";

bool golden_prefix(const fs::path& dir) {
    SynthSpec spec;
    spec.seed = 42;
    SynthTensorSpec alpha;
    alpha.name = "alpha";
    alpha.kind = "gaussian_weights";
    alpha.format = "bf16";
    alpha.count = 64;
    SynthTensorSpec beta;
    beta.name = "beta";
    beta.kind = "channel_correlated_kv";
    beta.format = "bf16";
    beta.tokens = 32;
    beta.channels = 8;
    beta.tokens_per_group = 16;
    spec.tensors = {alpha, beta};
    auto manifest = generate(spec, dir / "golden_data");
    auto path = dir / "golden.bplc";
    write_container(manifest, {{Algo::none, 3}, 32768, 16, {}}, path);
    auto bytes = read_file(path);
    return bytes.size() >= 64 && hex(bytes.data(), 64) == kGoldenPrefix;
}

// --- criterion 12: software transform throughput --------------------------

double transform_throughput_mb_s() {
    std::mt19937_64 rng(0xBEEF);
    auto block = testing::random_block(find_format("bf16"), 32768, rng);
    const int reps = 200;
    auto start = std::chrono::steady_clock::now();
    size_t sink = 0;
    for (int i = 0; i < reps; ++i) {
        auto mat = disaggregate(block);
        sink += aggregate(mat).bytes()[i % 8192];
    }
    auto elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    if (sink == SIZE_MAX)
        std::printf("unreachable\n");
    double bytes = static_cast<double>(block.bytes().size()) * reps;
    return bytes / elapsed / 1e6;
}

} // namespace

int main() {
    fs::path dir = fs::temp_directory_path() /
                   ("bplc_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);

    report(1, weights_roundtrip(),
           "lossless roundtrip, plane codec over all formats and algorithms "
           "(10000 superblocks each)");

    auto kv = kv_roundtrip();
    report(2, kv.lossless,
           "lossless roundtrip, channel-grouped KV pipeline with "
           "NaN/Inf/subnormal/zero words (1000 groups)");

    report(3, truncation_oracle(dir),
           "prefix-plane container reads equal the top-k bit-mask oracle for "
           "every k and format");

    report(4, kv.out_of_range == 0,
           "every exponent delta fits the original field width with "
           "per-channel minimum bases");

    auto wfx = build_weights_fixture(dir, "a");
    {
        std::ostringstream what;
        what << "gaussian bf16 weights: bit-plane zstd ratio "
             << wfx.ratio_bitplane << " >= 1.30 and >= 1.08x raw-layout ratio "
             << wfx.ratio_raw << " (entropy bound ratio " << wfx.oracle_ratio
             << ")";
        report(5,
               wfx.oracle_ratio >= 1.30 && wfx.ratio_bitplane >= 1.30 &&
                   wfx.ratio_bitplane >= 1.08 * wfx.ratio_raw,
               what.str());
    }

    auto kfx = build_kv_fixture(dir, "a");
    {
        std::ostringstream what;
        what << "correlated KV: clustered+delta ratio " << kfx.ratio_kv
             << " >= 1.25x token-major raw ratio " << kfx.ratio_raw
             << " and > unclustered plane ratio " << kfx.ratio_unclustered;
        report(6,
               kfx.ratio_kv >= 1.25 * kfx.ratio_raw &&
                   kfx.ratio_kv > kfx.ratio_unclustered,
               what.str());
    }

    report(7, plane_structure(wfx.bitplane),
           "mean exponent-plane compression ratio >= 3x mean mantissa-plane "
           "ratio on gaussian weights");

    report(8, traffic_proportionality(dir),
           "uncompressed planes: fetching 8 of 16 planes costs 50% +/- 2% of "
           "a full fetch, and cost-model bytes equal container bytes_touched");

    report(9, cost_ordering(wfx.bitplane),
           "8-plane schedule: bit-plane layout beats byte-level layout in "
           "bytes, energy and latency; all three monotone in plane count");

    report(10, golden_prefix(dir),
           "two-tensor container reproduces the frozen 64-byte golden prefix");

    {
        auto wfx2 = build_weights_fixture(dir, "b");
        auto kfx2 = build_kv_fixture(dir, "b");
        bool same = read_file(wfx.bitplane) == read_file(wfx2.bitplane) &&
                    read_file(wfx.raw) == read_file(wfx2.raw) &&
                    kfx.kv_bytes == kfx2.kv_bytes &&
                    cost_report_string(wfx.bitplane) ==
                        cost_report_string(wfx2.bitplane);
        report(11, same,
               "containers and cost reports are byte-identical across "
               "repeated runs with the same seeds");
    }

    {
        double mb_s = transform_throughput_mb_s();
        bool ok = mb_s >= 100.0;
        std::printf("[%s] 12 plane transform throughput %.0f MB/s "
                    "(soft target >= 100 MB/s%s)\n",
                    ok ? "PASS" : "FLAG", mb_s,
                    ok ? "" : "; performance regression flag, not a failure");
    }

    fs::remove_all(dir);
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
