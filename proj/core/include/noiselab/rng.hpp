#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace noiselab {

/// One derivation step in a stream path.
struct PathStep {
    std::string label;
    std::uint64_t index = 0;

    bool operator==(const PathStep&) const = default;
};

class Sampler;

/// Deterministic, splittable random stream.
///
/// A stream is identified by (root_seed, path); identical identities produce
/// identical draw sequences on every run. Streams are immutable: child()
/// returns a new stream and sampler() returns a fresh drawing cursor, so
/// sibling streams can be consumed from any number of threads without
/// coordination. Draws come from a counter-based splitmix64 sequence keyed
/// by a hash of the identity, so sibling streams are statistically
/// independent.
class RngStream {
public:
    RngStream() = default;

    static RngStream root(std::uint64_t seed);

    /// Derive the child stream (label, index). Injective over (label, index).
    RngStream child(std::string_view label, std::uint64_t index) const;

    Sampler sampler() const;

    std::uint64_t root_seed() const { return root_seed_; }
    const std::vector<PathStep>& path() const { return path_; }
    std::uint64_t key() const { return key_; }

    bool operator==(const RngStream&) const = default;

private:
    std::uint64_t root_seed_ = 0;
    std::uint64_t key_ = 0;
    std::vector<PathStep> path_;
};

/// Drawing cursor over a stream's counter-based sequence.
///
/// normal() consumes two uniforms per draw; poisson() consumes one uniform
/// for rates below 10 and a variable number above (rejection sampling).
/// For a fixed stream and call sequence the draws are reproducible.
class Sampler {
public:
    explicit Sampler(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64();

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01();

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_below(std::uint64_t n);

    double normal(double mean = 0.0, double stddev = 1.0);

    /// Poisson draw; rate must be finite and >= 0.
    /// Inversion below rate 10, transformed rejection (PTRD) above.
    std::uint64_t poisson(double rate);

private:
    std::uint64_t poisson_inversion(double rate);
    std::uint64_t poisson_ptrd(double rate);

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace noiselab
