#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "noiselab/rng.hpp"
#include "noiselab/tensor.hpp"

namespace noiselab {

inline constexpr std::size_t kStrengthCount = 6;

/// Canonical primitive order: the composite's default application order and
/// the component order of every strength vector.
enum class Primitive : std::size_t {
    Gaussian = 0,
    SaltPepper = 1,
    Poisson = 2,
    Quantization = 3,
    Anisotropic = 4,
    Clean = 5,
};

std::string_view primitive_name(Primitive p);
Primitive primitive_from_name(std::string_view name); // throws std::invalid_argument

/// Six-component strength vector: five noise intensities plus the clean
/// component. When produced by sample_strengths all components are positive
/// and sum to one; as a free label or prediction each component is just a
/// value in [0, 1].
struct NoiseStrengths {
    std::array<double, kStrengthCount> eta{};

    double& operator[](Primitive p) { return eta[static_cast<std::size_t>(p)]; }
    double operator[](Primitive p) const { return eta[static_cast<std::size_t>(p)]; }
    double& operator[](std::size_t i) { return eta[i]; }
    double operator[](std::size_t i) const { return eta[i]; }

    double sum() const;
    /// Index of the largest component; ties broken by canonical order.
    std::size_t dominant() const;

    bool operator==(const NoiseStrengths&) const = default;
};

/// Largest of the five noise components (the clean entry excluded), ties
/// broken by canonical order. The answer to "which primitive dominates".
std::size_t dominant_noise(const NoiseStrengths& s);

/// softmax(z) over the six components.
NoiseStrengths softmax_strengths(const std::array<double, kStrengthCount>& z);

/// eta = softmax(z), z ~ N(0, I6). All components positive, summing to 1.
NoiseStrengths sample_strengths(const RngStream& rng);

/// Poisson primitive variants. The default adds the raw Poisson draw, which
/// shifts the mean and saturates under clamping; Centered subtracts the rate
/// so the perturbation is zero-mean before clamping.
enum class PoissonMode { Additive, Centered };

/// Quantization primitive variants. Dithered applies uniform dither followed
/// by flooring to the step lattice (unbiased in expectation); AdditiveUniform
/// skips the rounding and just adds step-scaled uniform noise.
enum class QuantMode { Dithered, AdditiveUniform };

/// Fixed 5x5 smoothing kernel for the anisotropic primitive: the outer
/// product of [1,4,6,4,1]/16 with itself. Sums to 1, flip-symmetric.
const Kernel2d& aniso_kernel();

/// sqrt(sum of squared kernel weights): the stddev gain of white noise
/// filtered by aniso_kernel().
double aniso_kernel_l2();

// Single-source primitives. Every primitive returns a clamped tensor and is
// a bit-exact identity at eta = 0. Strength preconditions: gaussian,
// poisson, quantization, anisotropic require eta >= 0; salt & pepper
// requires 0 <= eta <= 0.5 (beyond 0.5 the two impulse bands overlap).
ImageTensor apply_gaussian(const ImageTensor& x, double eta, const RngStream& rng);
ImageTensor apply_salt_pepper(const ImageTensor& x, double eta, const RngStream& rng);
ImageTensor apply_poisson(const ImageTensor& x, double eta, const RngStream& rng,
                          PoissonMode mode = PoissonMode::Additive);
ImageTensor apply_quantization(const ImageTensor& x, double eta, const RngStream& rng,
                               QuantMode mode = QuantMode::Dithered);
ImageTensor apply_anisotropic(const ImageTensor& x, double eta, const RngStream& rng);
ImageTensor apply_clean(const ImageTensor& x, double eta);

/// Default application order (the canonical listing).
std::vector<Primitive> default_order();

/// Applies one primitive by name with the strengths entry that matches it.
ImageTensor apply_primitive(Primitive p, const ImageTensor& x, double eta,
                            const RngStream& rng, PoissonMode poisson_mode,
                            QuantMode quant_mode);

/// One synthesized corruption: enough provenance to rebuild the corrupted
/// tensor bit-exactly from the clean source.
struct NoiseSample {
    std::string clean_id;
    ImageTensor corrupted;
    NoiseStrengths strengths;
    RngStream seed_path;
    std::vector<Primitive> order;
};

struct ComposeOptions {
    PoissonMode poisson_mode = PoissonMode::Additive;
    QuantMode quant_mode = QuantMode::Dithered;
};

/// Sequential composite corruption: applies each primitive in `order` with
/// its strength component, clamping after every stage. Stage i draws from
/// rng.child(primitive_name, i), so one stage's strength never perturbs
/// another stage's randomness.
///
/// `order` must be a permutation of the six primitives.
NoiseSample compose(const ImageTensor& x, const NoiseStrengths& strengths,
                    const std::vector<Primitive>& order, const RngStream& rng,
                    std::string clean_id = {}, const ComposeOptions& opts = {});

/// Re-runs the composite recorded in `sample` against `clean`.
ImageTensor resynthesize(const ImageTensor& clean, const NoiseSample& sample,
                         const ComposeOptions& opts = {});

} // namespace noiselab
