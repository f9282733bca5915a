#include "noiselab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace noiselab {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer: a high-quality 64-bit mixing bijection.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

RngStream RngStream::root(std::uint64_t seed) {
    RngStream s;
    s.root_seed_ = seed;
    s.key_ = mix64(seed + kGolden);
    return s;
}

RngStream RngStream::child(std::string_view label, std::uint64_t index) const {
    RngStream c;
    c.root_seed_ = root_seed_;
    c.path_ = path_;
    c.path_.push_back({std::string(label), index});
    std::uint64_t step = mix64(hash_label(label) + kGolden * (index + 1));
    c.key_ = mix64((key_ ^ step) + kGolden);
    return c;
}

Sampler RngStream::sampler() const { return Sampler(key_); }

std::uint64_t Sampler::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Sampler::uniform01() {
    // Top 53 bits -> [0, 1).
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Sampler::uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    // Rejection to remove modulo bias.
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

double Sampler::normal(double mean, double stddev) {
    // Box-Muller, cosine branch. Two uniforms per draw keeps the stream
    // cursor advance independent of previous draws.
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double z = r * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

std::uint64_t Sampler::poisson(double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate))
        throw std::invalid_argument("poisson: rate must be finite and non-negative");
    if (rate == 0.0) return 0;
    if (rate < 10.0) return poisson_inversion(rate);
    return poisson_ptrd(rate);
}

std::uint64_t Sampler::poisson_inversion(double rate) {
    // Sequential search on the CDF; one uniform per draw.
    const double u = uniform01();
    double p = std::exp(-rate);
    double cdf = p;
    std::uint64_t k = 0;
    while (u >= cdf && k < 4096) {
        ++k;
        p *= rate / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

std::uint64_t Sampler::poisson_ptrd(double rate) {
    // Hoermann's transformed rejection with decomposition (PTRD), valid for
    // rate >= 10.
    const double smu = std::sqrt(rate);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        double u = uniform01() - 0.5;
        double v = uniform01();
        double us = 0.5 - std::abs(u);
        double kf = std::floor((2.0 * a / us + b) * u + rate + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double k = kf;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = -rate + k * std::log(rate) - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
}

} // namespace noiselab
