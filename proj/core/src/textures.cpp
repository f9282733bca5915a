#include "noiselab/textures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace noiselab {

namespace {

// Rescale so min maps to lo and max to hi; constant fields map to midpoint.
void normalize_range(ImageTensor& img, double lo, double hi) {
    const auto [mn_it, mx_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double mn = *mn_it;
    const double span = *mx_it - mn;
    if (span <= 0.0) {
        std::fill(img.data.begin(), img.data.end(), 0.5 * (lo + hi));
        return;
    }
    for (double& v : img.data) v = lo + (hi - lo) * (v - mn) / span;
}

ImageTensor linear_gradient(std::size_t channels, std::size_t size, Sampler& s) {
    const double theta = s.uniform01() * 2.0 * std::numbers::pi;
    const double cx = std::cos(theta), cy = std::sin(theta);
    const double phase = s.uniform01();
    ImageTensor img(channels, size, size);
    for (std::size_t c = 0; c < channels; ++c) {
        const double shift = channels > 1 ? 0.15 * static_cast<double>(c) : 0.0;
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double u = static_cast<double>(x) / static_cast<double>(size);
                const double v = static_cast<double>(y) / static_cast<double>(size);
                img.at(c, y, x) = cx * u + cy * v + phase + shift;
            }
    }
    return img;
}

ImageTensor radial_gradient(std::size_t channels, std::size_t size, Sampler& s) {
    const double cx = s.uniform01();
    const double cy = s.uniform01();
    const bool inverted = s.uniform01() < 0.5;
    ImageTensor img(channels, size, size);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double u = static_cast<double>(x) / static_cast<double>(size) - cx;
                const double v = static_cast<double>(y) / static_cast<double>(size) - cy;
                const double d = std::sqrt(u * u + v * v);
                img.at(c, y, x) = inverted ? -d : d;
            }
    return img;
}

ImageTensor checker(std::size_t channels, std::size_t size, Sampler& s) {
    const std::size_t cell = 2 + s.uniform_below(7); // 2..8 pixels
    const std::size_t ox = s.uniform_below(cell);
    const std::size_t oy = s.uniform_below(cell);
    const double a = s.uniform01();
    double b = s.uniform01();
    if (std::abs(a - b) < 0.2) b = a < 0.5 ? a + 0.5 : a - 0.5;
    ImageTensor img(channels, size, size);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const bool on = (((x + ox) / cell) + ((y + oy) / cell)) % 2 == 0;
                img.at(c, y, x) = on ? a : b;
            }
    return img;
}

ImageTensor plaid(std::size_t channels, std::size_t size, Sampler& s) {
    const double fx = 1.0 + std::floor(s.uniform01() * 4.0);
    const double fy = 1.0 + std::floor(s.uniform01() * 4.0);
    const double px = s.uniform01() * 2.0 * std::numbers::pi;
    const double py = s.uniform01() * 2.0 * std::numbers::pi;
    ImageTensor img(channels, size, size);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double u = static_cast<double>(x) / static_cast<double>(size);
                const double v = static_cast<double>(y) / static_cast<double>(size);
                img.at(c, y, x) = std::sin(2.0 * std::numbers::pi * fx * u + px) +
                                  std::sin(2.0 * std::numbers::pi * fy * v + py);
            }
    return img;
}

ImageTensor filtered_noise(std::size_t channels, std::size_t size, Sampler& s) {
    ImageTensor img(channels, size, size);
    for (double& v : img.data) v = s.uniform01();
    Kernel2d mean3;
    mean3.height = 3;
    mean3.width = 3;
    mean3.weights.assign(9, 1.0 / 9.0);
    for (int pass = 0; pass < 3; ++pass) img = conv2d_same(img, mean3);
    return img;
}

} // namespace

ImageTensor make_texture(TextureKind kind, std::size_t channels, std::size_t size,
                         const RngStream& rng, double lo, double hi) {
    if (channels == 0 || size == 0)
        throw std::invalid_argument("make_texture: empty shape");
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
        throw std::invalid_argument("make_texture: need 0 <= lo < hi <= 1");
    auto s = rng.sampler();
    ImageTensor img;
    switch (kind) {
        case TextureKind::LinearGradient: img = linear_gradient(channels, size, s); break;
        case TextureKind::RadialGradient: img = radial_gradient(channels, size, s); break;
        case TextureKind::Checker: img = checker(channels, size, s); break;
        case TextureKind::Plaid: img = plaid(channels, size, s); break;
        case TextureKind::FilteredNoise: img = filtered_noise(channels, size, s); break;
    }
    normalize_range(img, lo, hi);
    return img;
}

ImageTensor procedural_texture(std::string_view family, std::size_t channels,
                               std::size_t size, const RngStream& rng, double lo,
                               double hi) {
    std::vector<TextureKind> kinds;
    if (family == "smooth")
        kinds = {TextureKind::LinearGradient, TextureKind::RadialGradient,
                 TextureKind::Plaid};
    else if (family == "structured")
        kinds = {TextureKind::Checker, TextureKind::FilteredNoise};
    else if (family == "all")
        kinds = {TextureKind::LinearGradient, TextureKind::RadialGradient,
                 TextureKind::Checker, TextureKind::Plaid, TextureKind::FilteredNoise};
    else
        throw std::invalid_argument("procedural_texture: unknown family '" +
                                    std::string(family) + "'");
    auto picker = rng.child("kind", 0).sampler();
    const TextureKind kind = kinds[picker.uniform_below(kinds.size())];
    return make_texture(kind, channels, size, rng.child("texture", 0), lo, hi);
}

} // namespace noiselab
