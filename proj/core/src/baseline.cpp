#include "noiselab/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "noiselab/errors.hpp"
#include "noiselab/stats.hpp"

namespace noiselab {

namespace {

constexpr double kMadToSigma = 1.4826; // normal-consistency constant
constexpr std::size_t kQuantDensityLimit = 4096;
constexpr std::size_t kPoissonBins = 16;
constexpr std::size_t kPoissonMinBinPixels = 100;

Kernel2d mean3x3() {
    Kernel2d k;
    k.height = 3;
    k.width = 3;
    k.weights.assign(9, 1.0 / 9.0);
    return k;
}

// Noise stddev gain of the high-pass x - mean3x3(x): sqrt(sum (delta - k)^2).
double highpass_gain() {
    const Kernel2d k = mean3x3();
    double acc = 0.0;
    for (std::size_t i = 0; i < k.weights.size(); ++i) {
        const double d = (i == 4 ? 1.0 : 0.0) - k.weights[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double mad_sigma(std::span<const double> residual) {
    SummaryStats s = summary_stats(residual);
    return kMadToSigma * s.mad;
}

} // namespace

double estimate_gaussian_sigma(const ImageTensor& x, const std::optional<ImageTensor>& clean) {
    if (clean) {
        if (!x.same_shape(*clean))
            throw std::invalid_argument("estimate_gaussian_sigma: shape mismatch");
        std::vector<double> residual(x.data.size());
        for (std::size_t i = 0; i < residual.size(); ++i)
            residual[i] = x.data[i] - clean->data[i];
        return mad_sigma(residual);
    }
    const ImageTensor smoothed = conv2d_same(x, mean3x3());
    std::vector<double> residual(x.data.size());
    for (std::size_t i = 0; i < residual.size(); ++i)
        residual[i] = x.data[i] - smoothed.data[i];
    static const double gain = highpass_gain();
    return mad_sigma(residual) / gain;
}

double estimate_sp_fraction(const ImageTensor& x) {
    std::size_t zeros = 0, ones = 0;
    for (double v : x.data) {
        if (v == 0.0)
            ++zeros;
        else if (v == 1.0)
            ++ones;
    }
    const double n = static_cast<double>(x.data.size());
    return (static_cast<double>(zeros) + static_cast<double>(ones)) / (2.0 * n);
}

double estimate_quant_step(const ImageTensor& x) {
    std::vector<double> sorted = x.data;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> unique;
    unique.reserve(1024);
    for (double v : sorted) {
        if (unique.empty() || v != unique.back()) unique.push_back(v);
        if (unique.size() > kQuantDensityLimit) return 0.0; // too dense: no lattice
    }
    if (unique.size() < 2) return 0.0;

    std::vector<double> gaps;
    gaps.reserve(unique.size());
    for (std::size_t i = 1; i < unique.size(); ++i) {
        const double g = unique[i] - unique[i - 1];
        if (g > 1e-12) gaps.push_back(g);
    }
    std::sort(gaps.begin(), gaps.end());

    const double n = static_cast<double>(sorted.size());
    for (double g : gaps) {
        std::size_t covered = 0;
        for (double v : sorted) {
            const double q = v / g;
            if (std::abs(q - std::round(q)) < 1e-6) ++covered;
        }
        if (static_cast<double>(covered) >= 0.99 * n) return g;
    }
    return 0.0;
}

namespace {

double lag1_corr(const std::vector<double>& a, const std::vector<double>& b) {
    // Pearson r over paired sequences; degenerate pairs map to 0.
    if (a.size() < 2) return 0.0;
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace

double estimate_spatial_corr(const ImageTensor& x, const ImageTensor& clean) {
    if (!x.same_shape(clean))
        throw std::invalid_argument("estimate_spatial_corr: shape mismatch");

    std::vector<double> left, right, top, bottom;
    left.reserve(x.data.size());
    right.reserve(x.data.size());
    top.reserve(x.data.size());
    bottom.reserve(x.data.size());
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t y = 0; y < x.height; ++y) {
            for (std::size_t xx = 0; xx + 1 < x.width; ++xx) {
                left.push_back(x.at(c, y, xx) - clean.at(c, y, xx));
                right.push_back(x.at(c, y, xx + 1) - clean.at(c, y, xx + 1));
            }
        }
        for (std::size_t y = 0; y + 1 < x.height; ++y) {
            for (std::size_t xx = 0; xx < x.width; ++xx) {
                top.push_back(x.at(c, y, xx) - clean.at(c, y, xx));
                bottom.push_back(x.at(c, y + 1, xx) - clean.at(c, y + 1, xx));
            }
        }
    }
    return 0.5 * (lag1_corr(left, right) + lag1_corr(top, bottom));
}

double estimate_poisson_gain(const ImageTensor& x, const ImageTensor& clean,
                             std::map<std::string, double>* diagnostics) {
    if (!x.same_shape(clean))
        throw std::invalid_argument("estimate_poisson_gain: shape mismatch");

    // Equal-mass binning over clean intensity.
    std::vector<std::size_t> order(clean.data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return clean.data[a] < clean.data[b];
    });
    if (clean.data[order.front()] == clean.data[order.back()])
        throw std::invalid_argument(
            "estimate_poisson_gain: clean reference needs at least two intensity levels");

    struct Bin {
        double mean = 0.0;
        double var = 0.0;
        std::size_t n = 0;
    };
    std::vector<Bin> bins;
    const std::size_t n = order.size();
    const std::size_t per_bin = std::max<std::size_t>(1, n / kPoissonBins);
    for (std::size_t start = 0; start < n; start += per_bin) {
        const std::size_t end = std::min(n, start + per_bin);
        std::vector<double> resid;
        resid.reserve(end - start);
        double mean_clean = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            resid.push_back(x.data[order[i]] - clean.data[order[i]]);
            mean_clean += clean.data[order[i]];
        }
        if (resid.size() < kPoissonMinBinPixels) continue;
        Bin b;
        b.mean = mean_clean / static_cast<double>(resid.size());
        b.var = variance_of(resid);
        b.n = resid.size();
        bins.push_back(b);
    }

    // Collapse bins with identical means (few-level clean references).
    std::vector<Bin> merged;
    for (const Bin& b : bins) {
        if (!merged.empty() && std::abs(merged.back().mean - b.mean) < 1e-12) {
            Bin& m = merged.back();
            const double wn = static_cast<double>(b.n) / static_cast<double>(m.n + b.n);
            m.var = m.var * (1.0 - wn) + b.var * wn;
            m.n += b.n;
        } else {
            merged.push_back(b);
        }
    }

    double num = 0.0, den = 0.0;          // saturation-corrected, through origin
    double sm = 0.0, sv = 0.0, smm = 0.0, smv = 0.0; // affine fit on raw variances
    std::size_t used = 0;
    for (const Bin& b : merged) {
        if (b.mean > 0.999) continue; // correction blows up at the saturation point
        const double corrected = b.var / ((1.0 - b.mean) * (1.0 - b.mean));
        num += b.mean * corrected;
        den += b.mean * b.mean;
        sm += b.mean;
        sv += b.var;
        smm += b.mean * b.mean;
        smv += b.mean * b.var;
        ++used;
    }
    const double slope = den > 0.0 ? num / den : 0.0;

    if (diagnostics) {
        const double k = static_cast<double>(used);
        double affine_slope = 0.0, affine_intercept = 0.0;
        const double det = k * smm - sm * sm;
        if (used >= 2 && det != 0.0) {
            affine_slope = (k * smv - sm * sv) / det;
            affine_intercept = (sv - affine_slope * sm) / k;
        } else if (used >= 1) {
            affine_intercept = sv / k;
        }
        (*diagnostics)["bins_used"] = k;
        (*diagnostics)["affine_slope"] = affine_slope;
        (*diagnostics)["affine_intercept"] = affine_intercept;
    }
    return slope;
}

BaselineEstimate estimate_all(const ImageTensor& x, const ImageTensor& clean) {
    if (!x.same_shape(clean)) throw std::invalid_argument("estimate_all: shape mismatch");

    BaselineEstimate est;
    const double n = static_cast<double>(x.data.size());
    std::size_t zeros = 0, ones = 0;
    for (double v : x.data) {
        if (v == 0.0)
            ++zeros;
        else if (v == 1.0)
            ++ones;
    }
    const double frac0 = static_cast<double>(zeros) / n;
    const double frac1 = static_cast<double>(ones) / n;

    const double sigma = estimate_gaussian_sigma(x, clean);
    const double rho = estimate_spatial_corr(x, clean);
    const double sp = estimate_sp_fraction(x);
    const double quant = estimate_quant_step(x);

    // Salt & pepper produces balanced zero/one impulses; additive Poisson
    // produces saturations only. Balanced impulses veto the Poisson reading.
    const bool impulses_balanced =
        frac0 > 1e-4 && frac1 > 1e-4 &&
        std::min(frac0, frac1) > 0.25 * std::max(frac0, frac1);
    double poisson = 0.0;
    if (!impulses_balanced) {
        std::map<std::string, double> diag;
        poisson = estimate_poisson_gain(x, clean, &diag);
        for (const auto& [k, v] : diag) est.diagnostics["poisson." + k] = v;
    }

    const bool correlated = rho >= 0.4;
    est.strengths[Primitive::Gaussian] = correlated ? 0.0 : sigma;
    est.strengths[Primitive::Anisotropic] = correlated ? sigma / aniso_kernel_l2() : 0.0;
    est.strengths[Primitive::SaltPepper] = sp;
    est.strengths[Primitive::Poisson] = poisson;
    est.strengths[Primitive::Quantization] = quant;

    double noise_sum = 0.0;
    for (std::size_t i = 0; i + 1 < kStrengthCount; ++i) {
        est.strengths[i] = std::clamp(est.strengths[i], 0.0, 1.0);
        noise_sum += est.strengths[i];
    }
    est.strengths[Primitive::Clean] = std::clamp(1.0 - noise_sum, 0.0, 1.0);

    est.diagnostics["residual_sigma_mad"] = sigma;
    est.diagnostics["residual_lag1_corr"] = rho;
    est.diagnostics["frac_zero"] = frac0;
    est.diagnostics["frac_one"] = frac1;
    return est;
}

} // namespace noiselab
