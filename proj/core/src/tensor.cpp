#include "noiselab/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace noiselab {

ImageTensor clamp01(const ImageTensor& x) {
    ImageTensor out = x;
    clamp01_inplace(out);
    return out;
}

void clamp01_inplace(ImageTensor& x) {
    for (double& v : x.data) v = std::min(1.0, std::max(0.0, v));
}

namespace {

// Edge-inclusive mirror: -1 -> 0, -2 -> 1, n -> n-1. Folds repeatedly so it
// stays defined for kernels wider than the image.
std::size_t reflect_index(long long i, long long n) {
    if (n == 1) return 0;
    const long long period = 2 * n;
    long long m = i % period;
    if (m < 0) m += period;
    if (m >= n) m = period - 1 - m;
    return static_cast<std::size_t>(m);
}

} // namespace

ImageTensor conv2d_same(const ImageTensor& x, const Kernel2d& kernel) {
    if (kernel.height == 0 || kernel.width == 0 ||
        kernel.weights.size() != kernel.height * kernel.width)
        throw std::invalid_argument("conv2d_same: malformed kernel");
    if (kernel.height % 2 == 0 || kernel.width % 2 == 0)
        throw std::invalid_argument("conv2d_same: kernel sides must be odd");

    const long long kh = static_cast<long long>(kernel.height);
    const long long kw = static_cast<long long>(kernel.width);
    const long long cy = kh / 2;
    const long long cx = kw / 2;
    const long long h = static_cast<long long>(x.height);
    const long long w = static_cast<long long>(x.width);

    ImageTensor out(x.channels, x.height, x.width);
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (long long y = 0; y < h; ++y) {
            for (long long xx = 0; xx < w; ++xx) {
                double acc = 0.0;
                for (long long ky = 0; ky < kh; ++ky) {
                    const std::size_t sy = reflect_index(y + ky - cy, h);
                    for (long long kx = 0; kx < kw; ++kx) {
                        const std::size_t sx = reflect_index(xx + kx - cx, w);
                        acc += kernel.at(static_cast<std::size_t>(ky),
                                         static_cast<std::size_t>(kx)) *
                               x.at(c, sy, sx);
                    }
                }
                out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) = acc;
            }
        }
    }
    return out;
}

} // namespace noiselab
