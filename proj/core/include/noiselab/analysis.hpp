#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noiselab/engine.hpp"
#include "noiselab/tensor.hpp"

namespace noiselab {

// ---------------------------------------------------------------------------
// Regression and residual metrics
// ---------------------------------------------------------------------------

struct RegressionMetrics {
    double rmse = 0.0;
    double r_squared = 0.0;
    double pearson_r = 0.0;
};

/// rmse/R^2/Pearson r of predictions against truth.
/// Throws UndefinedStatistic when truth has zero variance.
RegressionMetrics regression_metrics(std::span<const double> pred,
                                     std::span<const double> truth);

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
    double residual_stddev = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
/// Throws UndefinedStatistic when x is constant; requires n >= 2.
RegressionFit linear_fit(std::span<const double> x, std::span<const double> y);

struct ResidualFit {
    double mu = 0.0;    // mean bias of pred - truth
    double sigma = 0.0; // sample stddev of pred - truth
};

ResidualFit fit_residual_gaussian(std::span<const double> pred,
                                  std::span<const double> truth);

// ---------------------------------------------------------------------------
// Effect size
// ---------------------------------------------------------------------------

enum class EffectClass { Small, Medium, Large };

struct EffectSize {
    double f_squared = 0.0;
    EffectClass cls = EffectClass::Small;
};

/// Cohen's f^2 = (R2_full - R2_reduced) / (1 - R2_full), classified
/// Small < 0.15 <= Medium < 0.35 <= Large.
EffectSize cohens_f2(double full_r2, double reduced_r2);

/// Single-model form f^2 = R^2 / (1 - R^2).
EffectSize cohens_f2_single(double r2);

std::string_view effect_class_name(EffectClass c);

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

struct TTestResult {
    double t = 0.0;
    double p_two_sided = 1.0;
    std::size_t df = 0;
};

/// Paired two-sided t-test. Throws UndefinedStatistic when the differences
/// have zero variance; requires equal lengths and n >= 2.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Student-t two-sided p-value via the regularized incomplete beta function.
double student_t_p_two_sided(double t, double df);

// ---------------------------------------------------------------------------
// Distribution distances and density estimation
// ---------------------------------------------------------------------------

/// Biased (V-statistic) squared maximum mean discrepancy with RBF kernel
/// k(u,v) = exp(-|u-v|^2 / (2 bw^2)). With no bandwidth given, uses the
/// median pairwise distance of the pooled sample. Always >= 0; 0 on
/// identical multisets. Throws std::invalid_argument on empty samples.
double mmd_rbf(std::span<const std::vector<double>> sample_a,
               std::span<const std::vector<double>> sample_b,
               std::optional<double> bandwidth = std::nullopt);

/// Gaussian-kernel density on `grid`. Auto bandwidth: Silverman's rule
/// 1.06 * stddev * n^(-1/5). Throws UndefinedStatistic when auto bandwidth
/// degenerates (zero spread); requires >= 2 points.
std::vector<double> kde_1d(std::span<const double> points, std::span<const double> grid,
                           std::optional<double> bandwidth = std::nullopt);

// ---------------------------------------------------------------------------
// Classification views of strength vectors
// ---------------------------------------------------------------------------

struct ClassificationReport {
    double dominant_accuracy = 0.0;
    std::vector<double> thresholds;
    std::vector<double> threshold_accuracy;
};

/// dominant_accuracy: fraction with argmax(pred) == argmax(truth), ties
/// broken by canonical component order. threshold_accuracy(t): fraction of
/// (instance, component) pairs where the >= t indicators agree.
ClassificationReport classification_report(std::span<const NoiseStrengths> pred,
                                           std::span<const NoiseStrengths> truth,
                                           std::span<const double> thresholds);

// ---------------------------------------------------------------------------
// Full-reference image quality
// ---------------------------------------------------------------------------

struct QualityMetrics {
    double psnr_db = 0.0; // +infinity for identical images (peak = 1.0)
    double ssim = 0.0;    // 11x11 Gaussian window sigma 1.5, K1 .01, K2 .03
};

QualityMetrics reference_quality(const ImageTensor& x, const ImageTensor& ref);

// ---------------------------------------------------------------------------
// Correlation matrix
// ---------------------------------------------------------------------------

struct NamedColumn {
    std::string name;
    std::vector<double> values;
};

struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<double> r; // row-major n x n; NaN marks undefined entries
    double at(std::size_t i, std::size_t j) const { return r[i * names.size() + j]; }
};

/// Pairwise Pearson matrix. Zero-variance columns yield NaN entries in their
/// row and column rather than an error.
CorrelationMatrix correlation_matrix(std::span<const NamedColumn> columns);

// ---------------------------------------------------------------------------
// Linear projection of embedding sets
// ---------------------------------------------------------------------------

struct Pca2d {
    std::vector<std::array<double, 2>> coords;
    std::array<double, 2> explained_ratio{};
    std::vector<double> mean;                // centroid of the input set
    std::array<std::vector<double>, 2> axes; // principal directions, unit norm
    bool degenerate = false;                 // rank < 2: second axis is all zeros
};

/// Projection onto the top-2 principal components of the centered set.
/// Requires at least 3 embeddings of equal dimension.
Pca2d pca_2d(std::span<const std::vector<double>> embeddings);

// ---------------------------------------------------------------------------
// Depth-resolved two-arm comparison
// ---------------------------------------------------------------------------

struct DepthArmFit {
    std::string arm;
    RegressionFit fit;
};

struct DepthAnalysis {
    DepthArmFit arm_a;
    DepthArmFit arm_b;
    double interaction_t = 0.0;       // slope-difference test from the full model
    double interaction_p = 1.0;
    EffectSize intervention_effect{}; // full (depth+arm+interaction) vs depth-only
    double full_r2 = 0.0;
    double reduced_r2 = 0.0;
};

/// Two-arm depth regression: per-arm OLS fits, the slope-difference t-test
/// (the interaction coefficient of value ~ depth * arm), and Cohen's f^2 of
/// the full model against depth alone.
DepthAnalysis depth_analysis(std::span<const double> depth, std::span<const double> value,
                             std::span<const int> arm, std::string arm_a_name = "a",
                             std::string arm_b_name = "b");

} // namespace noiselab
