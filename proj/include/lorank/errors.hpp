#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lorank {

/// Bad arguments, malformed documents, violated structural invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Filesystem and serialization failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: non-convergence, divergence, corrupted spectra.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// FNV-1a 64-bit hash of a byte string. Used for per-tensor seed derivation
/// and blob file naming, so the constants are part of the on-disk contract.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace lorank
