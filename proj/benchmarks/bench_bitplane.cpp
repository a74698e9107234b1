#include <random>

#include <benchmark/benchmark.h>

#include "bplc/bitplane.hpp"
#include "bplc/codec.hpp"
#include "bplc/synth.hpp"

using namespace bplc;

namespace {

ValueBlock gaussian_superblock() {
    SynthTensorSpec spec;
    spec.name = "b";
    spec.kind = "gaussian_weights";
    spec.format = "bf16";
    spec.count = 32768;
    spec.sigma = 0.05;
    return generate_block(spec, 1);
}

ValueBlock random_superblock() {
    std::mt19937_64 rng(2);
    ValueBlock block(find_format("bf16"), 32768);
    for (size_t j = 0; j < block.count(); ++j)
        block.set_word(j, static_cast<uint32_t>(rng()) & 0xFFFF);
    return block;
}

void bm_disaggregate(benchmark::State& state) {
    auto block = random_superblock();
    for (auto _ : state) {
        auto mat = disaggregate(block);
        benchmark::DoNotOptimize(mat.planes[0].data());
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(block.bytes().size()));
}
BENCHMARK(bm_disaggregate);

void bm_aggregate(benchmark::State& state) {
    auto mat = disaggregate(random_superblock());
    for (auto _ : state) {
        auto block = aggregate(mat);
        benchmark::DoNotOptimize(block.bytes().data());
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * 65536);
}
BENCHMARK(bm_aggregate);

void bm_compress(benchmark::State& state) {
    auto mat = disaggregate(gaussian_superblock());
    CodecSettings settings{static_cast<Algo>(state.range(0)), 3};
    for (auto _ : state) {
        auto sb = compress_superblock(mat, settings);
        benchmark::DoNotOptimize(sb.payloads.data());
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * 65536);
}
BENCHMARK(bm_compress)->Arg(1)->Arg(2); // lz4, zstd

void bm_decompress(benchmark::State& state) {
    auto sb = compress_superblock(disaggregate(gaussian_superblock()),
                                  {Algo::zstd, 3});
    size_t planes = static_cast<size_t>(state.range(0));
    for (auto _ : state) {
        auto mat = decompress_superblock(sb, planes);
        benchmark::DoNotOptimize(mat.planes[0].data());
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(4096 * planes));
}
BENCHMARK(bm_decompress)->Arg(8)->Arg(16);

} // namespace

BENCHMARK_MAIN();
