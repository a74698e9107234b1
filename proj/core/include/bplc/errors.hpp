#pragma once

#include <stdexcept>
#include <string>

namespace bplc {

// Base for everything this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unknown/invalid numeric format, or a word/format width mismatch.
struct FormatError : Error {
    using Error::Error;
};

// Bad caller-supplied argument (out-of-range plane count, mismatched
// channel counts, invalid settings).
struct ArgumentError : Error {
    using Error::Error;
};

// Underlying compressor failure or corrupt payload.
struct CodecError : Error {
    using Error::Error;
};

// Container payload failed to decode to the expected size/shape.
struct IntegrityError : Error {
    using Error::Error;
};

// Filesystem-level failure (unreadable input, unwritable output).
struct IoError : Error {
    using Error::Error;
};

} // namespace bplc
