#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace noiselab {

// FNV-1a, 64-bit. Used for content digests in manifests, checkpoints and
// report provenance. Not cryptographic.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string to_hex(std::uint64_t value);

/// Digest of a whole file's bytes; throws std::runtime_error if unreadable.
std::uint64_t digest_file(const std::string& path);

} // namespace noiselab
