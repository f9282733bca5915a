#include "noiselab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noiselab {

namespace {

const std::array<std::string_view, kStrengthCount> kNames = {
    "gaussian", "salt_pepper", "poisson", "quantization", "anisotropic", "clean"};

Kernel2d make_aniso_kernel() {
    const std::array<double, 5> b = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    Kernel2d k;
    k.height = 5;
    k.width = 5;
    k.weights.resize(25);
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) k.weights[y * 5 + x] = b[y] * b[x];
    return k;
}

void require_nonnegative(double eta, const char* op) {
    if (!(eta >= 0.0)) throw std::invalid_argument(std::string(op) + ": eta must be >= 0");
}

} // namespace

std::string_view primitive_name(Primitive p) { return kNames[static_cast<std::size_t>(p)]; }

Primitive primitive_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<Primitive>(i);
    throw std::invalid_argument("unknown primitive name: " + std::string(name));
}

double NoiseStrengths::sum() const {
    double s = 0.0;
    for (double v : eta) s += v;
    return s;
}

std::size_t NoiseStrengths::dominant() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < eta.size(); ++i)
        if (eta[i] > eta[best]) best = i;
    return best;
}

std::size_t dominant_noise(const NoiseStrengths& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < kStrengthCount; ++i)
        if (s[i] > s[best]) best = i;
    return best;
}

NoiseStrengths softmax_strengths(const std::array<double, kStrengthCount>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    NoiseStrengths s;
    double denom = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s.eta[i] = std::exp(z[i] - zmax);
        denom += s.eta[i];
    }
    for (double& v : s.eta) v /= denom;
    return s;
}

NoiseStrengths sample_strengths(const RngStream& rng) {
    auto sampler = rng.sampler();
    std::array<double, kStrengthCount> z{};
    for (double& v : z) v = sampler.normal();
    return softmax_strengths(z);
}

const Kernel2d& aniso_kernel() {
    static const Kernel2d k = make_aniso_kernel();
    return k;
}

double aniso_kernel_l2() {
    const Kernel2d& k = aniso_kernel();
    double acc = 0.0;
    for (double w : k.weights) acc += w * w;
    return std::sqrt(acc);
}

ImageTensor apply_gaussian(const ImageTensor& x, double eta, const RngStream& rng) {
    require_nonnegative(eta, "apply_gaussian");
    if (eta == 0.0) return x;
    auto sampler = rng.sampler();
    ImageTensor out = x;
    for (double& v : out.data) v += sampler.normal(0.0, eta);
    clamp01_inplace(out);
    return out;
}

ImageTensor apply_salt_pepper(const ImageTensor& x, double eta, const RngStream& rng) {
    if (!(eta >= 0.0) || eta > 0.5)
        throw std::invalid_argument("apply_salt_pepper: eta must lie in [0, 0.5]");
    if (eta == 0.0) return x;
    auto sampler = rng.sampler();
    ImageTensor out = x;
    for (double& v : out.data) {
        const double r = sampler.uniform01();
        if (r < eta)
            v = 0.0;
        else if (r > 1.0 - eta)
            v = 1.0;
    }
    return out;
}

ImageTensor apply_poisson(const ImageTensor& x, double eta, const RngStream& rng,
                          PoissonMode mode) {
    require_nonnegative(eta, "apply_poisson");
    if (eta == 0.0) return x;
    auto sampler = rng.sampler();
    ImageTensor out = x;
    for (double& v : out.data) {
        const double rate = eta * v;
        const double draw = static_cast<double>(sampler.poisson(rate));
        v += (mode == PoissonMode::Additive) ? draw : draw - rate;
    }
    clamp01_inplace(out);
    return out;
}

ImageTensor apply_quantization(const ImageTensor& x, double eta, const RngStream& rng,
                               QuantMode mode) {
    require_nonnegative(eta, "apply_quantization");
    if (eta < 1e-6) return x; // step too fine to matter; exact pass-through
    auto sampler = rng.sampler();
    ImageTensor out = x;
    if (mode == QuantMode::Dithered) {
        for (double& v : out.data) v = eta * std::floor(v / eta + sampler.uniform01());
    } else {
        for (double& v : out.data) v = eta * (v / eta + sampler.uniform01());
    }
    clamp01_inplace(out);
    return out;
}

ImageTensor apply_anisotropic(const ImageTensor& x, double eta, const RngStream& rng) {
    require_nonnegative(eta, "apply_anisotropic");
    if (eta == 0.0) return x;
    auto sampler = rng.sampler();
    ImageTensor field(x.channels, x.height, x.width);
    for (double& v : field.data) v = sampler.normal(0.0, eta);
    field = conv2d_same(field, aniso_kernel());
    ImageTensor out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += field.data[i];
    clamp01_inplace(out);
    return out;
}

ImageTensor apply_clean(const ImageTensor& x, double /*eta*/) { return x; }

std::vector<Primitive> default_order() {
    return {Primitive::Gaussian, Primitive::SaltPepper, Primitive::Poisson,
            Primitive::Quantization, Primitive::Anisotropic, Primitive::Clean};
}

ImageTensor apply_primitive(Primitive p, const ImageTensor& x, double eta,
                            const RngStream& rng, PoissonMode poisson_mode,
                            QuantMode quant_mode) {
    switch (p) {
        case Primitive::Gaussian: return apply_gaussian(x, eta, rng);
        case Primitive::SaltPepper: return apply_salt_pepper(x, eta, rng);
        case Primitive::Poisson: return apply_poisson(x, eta, rng, poisson_mode);
        case Primitive::Quantization: return apply_quantization(x, eta, rng, quant_mode);
        case Primitive::Anisotropic: return apply_anisotropic(x, eta, rng);
        case Primitive::Clean: return apply_clean(x, eta);
    }
    throw std::invalid_argument("apply_primitive: unknown primitive");
}

NoiseSample compose(const ImageTensor& x, const NoiseStrengths& strengths,
                    const std::vector<Primitive>& order, const RngStream& rng,
                    std::string clean_id, const ComposeOptions& opts) {
    if (order.size() != kStrengthCount)
        throw std::invalid_argument("compose: order must list all six primitives");
    std::array<bool, kStrengthCount> seen{};
    for (Primitive p : order) {
        auto i = static_cast<std::size_t>(p);
        if (i >= kStrengthCount || seen[i])
            throw std::invalid_argument("compose: order must be a permutation of the primitives");
        seen[i] = true;
    }

    NoiseSample sample;
    sample.clean_id = std::move(clean_id);
    sample.strengths = strengths;
    sample.seed_path = rng;
    sample.order = order;

    ImageTensor current = x;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Primitive p = order[i];
        const RngStream stage = rng.child(primitive_name(p), i);
        // Sampled strength vectors are unbounded per component, but the
        // salt & pepper stage is only defined up to 0.5; the stage applies
        // the capped value while the label keeps the sampled one.
        double eta = strengths[p];
        if (p == Primitive::SaltPepper) eta = std::min(eta, 0.5);
        current = apply_primitive(p, current, eta, stage, opts.poisson_mode, opts.quant_mode);
        clamp01_inplace(current);
    }
    sample.corrupted = std::move(current);
    return sample;
}

ImageTensor resynthesize(const ImageTensor& clean, const NoiseSample& sample,
                         const ComposeOptions& opts) {
    return compose(clean, sample.strengths, sample.order, sample.seed_path, sample.clean_id,
                   opts)
        .corrupted;
}

} // namespace noiselab
