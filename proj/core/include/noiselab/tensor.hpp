#pragma once

#include <cstddef>
#include <vector>

namespace noiselab {

/// C x H x W image with row-major storage, one double per sample.
///
/// Pixel values are dimensionless intensities; every engine and I/O
/// operation keeps them inside [0, 1]. Arithmetic runs in double throughout;
/// the 32-bit narrowing happens only in the on-disk tensor format.
struct ImageTensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    std::size_t size() const { return channels * height * width; }

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * height + y) * width + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * height + y) * width + x];
    }

    bool same_shape(const ImageTensor& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }

    bool operator==(const ImageTensor&) const = default;
};

/// 2-D convolution kernel, row-major, odd side lengths.
struct Kernel2d {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> weights;

    double at(std::size_t y, std::size_t x) const { return weights[y * width + x]; }
};

/// Per-element min(1, max(0, v)). Idempotent, shape preserving.
ImageTensor clamp01(const ImageTensor& x);

/// In-place variant used by the corruption pipeline's per-stage clamping.
void clamp01_inplace(ImageTensor& x);

/// Same-size 2-D convolution with reflected (mirrored, edge-inclusive)
/// borders, applied per channel. Reflection makes constant images exact
/// fixed points of kernels that sum to one. Kernel sides must be odd.
///
/// Throws std::invalid_argument on even kernel sides or empty kernel.
ImageTensor conv2d_same(const ImageTensor& x, const Kernel2d& kernel);

} // namespace noiselab
