#pragma once

// Minimal declarations for the stable simple APIs of liblz4 and libzstd.
// The sandbox ships the runtime libraries without -dev headers; these
// entry points have had a stable ABI since lz4 r129 / zstd 1.0.

#include <cstddef>

extern "C" {

// --- lz4 (block format) ---
int LZ4_compressBound(int inputSize);
int LZ4_compress_default(const char* src, char* dst, int srcSize,
                         int dstCapacity);
int LZ4_decompress_safe(const char* src, char* dst, int compressedSize,
                        int dstCapacity);

// --- zstd (frame format) ---
size_t ZSTD_compressBound(size_t srcSize);
size_t ZSTD_compress(void* dst, size_t dstCapacity, const void* src,
                     size_t srcSize, int compressionLevel);
size_t ZSTD_decompress(void* dst, size_t dstCapacity, const void* src,
                       size_t compressedSize);
unsigned ZSTD_isError(size_t code);

} // extern "C"
