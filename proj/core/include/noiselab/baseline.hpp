#pragma once

#include <map>
#include <optional>
#include <string>

#include "noiselab/engine.hpp"
#include "noiselab/tensor.hpp"

namespace noiselab {

/// Classical per-primitive estimates plus estimator internals, used both as
/// an independent check on the corruption engine and as the non-learned
/// baseline for the trained quantification head.
struct BaselineEstimate {
    NoiseStrengths strengths;
    std::map<std::string, double> diagnostics;
};

/// Robust additive-noise stddev.
///
/// With a clean reference: 1.4826 * MAD of the residual. Blind: the same
/// statistic on the mean-filter high-pass residual, divided by the high-pass
/// noise gain of the 3x3 mean kernel.
double estimate_gaussian_sigma(const ImageTensor& x,
                               const std::optional<ImageTensor>& clean = std::nullopt);

/// Symmetric impulse fraction: (count(x == 0) + count(x == 1)) / (2n).
double estimate_sp_fraction(const ImageTensor& x);

/// Quantization step detector: the smallest positive gap between distinct
/// pixel values whose multiples carry at least 99% of the pixel mass.
/// Returns 0 when the value set is too dense to be a quantization lattice
/// (more than 4096 distinct values) or no gap reaches coverage.
double estimate_quant_step(const ImageTensor& x);

/// Mean of the horizontal and vertical lag-1 Pearson autocorrelations of the
/// residual x - clean. Zero residual is defined as 0.
double estimate_spatial_corr(const ImageTensor& x, const ImageTensor& clean);

/// Signal-dependent noise gain for the additive Poisson model.
///
/// Pixels are grouped into 16 equal-mass bins of clean intensity; per-bin
/// residual variance is corrected for the saturation attenuation (1 - m)^2
/// and regressed through the origin against the bin mean. Bins with fewer
/// than 100 pixels or means at the saturation point are dropped.
///
/// Requires a clean reference with at least two distinct intensity levels.
/// Diagnostics: bins_used, affine_slope, affine_intercept (uncorrected
/// variance-vs-mean fit; a flat slope with positive intercept indicates
/// signal-independent noise instead).
double estimate_poisson_gain(const ImageTensor& x, const ImageTensor& clean,
                             std::map<std::string, double>* diagnostics = nullptr);

/// Combined six-component estimate. The anisotropic/gaussian split uses the
/// residual lag-1 autocorrelation (threshold 0.4); the Poisson estimate is
/// suppressed when the zero/one impulse counts are balanced enough to
/// indicate salt & pepper. The clean component is one minus the summed noise
/// estimates, floored at zero.
BaselineEstimate estimate_all(const ImageTensor& x, const ImageTensor& clean);

} // namespace noiselab
