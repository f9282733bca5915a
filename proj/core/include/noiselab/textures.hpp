#pragma once

#include <string_view>

#include "noiselab/rng.hpp"
#include "noiselab/tensor.hpp"

namespace noiselab {

/// Procedural clean-image generators, so the full pipeline and test suite
/// run without any external data.
enum class TextureKind {
    LinearGradient,
    RadialGradient,
    Checker,
    Plaid,
    FilteredNoise,
};

/// Families group the generators into disjoint content distributions:
///   "smooth"     - linear gradients, radial gradients, sinusoidal plaids
///   "structured" - checkerboards, low-pass filtered noise
///   "all"        - union of both
/// Unknown family names throw std::invalid_argument.
ImageTensor procedural_texture(std::string_view family, std::size_t channels,
                               std::size_t size, const RngStream& rng, double lo = 0.0,
                               double hi = 1.0);

ImageTensor make_texture(TextureKind kind, std::size_t channels, std::size_t size,
                         const RngStream& rng, double lo = 0.0, double hi = 1.0);

} // namespace noiselab
