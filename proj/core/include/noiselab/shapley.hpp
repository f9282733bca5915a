#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace noiselab {

using FeatureModel = std::function<double(std::span<const double>)>;

/// Exact interventional Shapley attribution of one instance.
///
/// Coalition value v(S) is the background-mean model output with the
/// instance's values on S and background values elsewhere. phi is computed
/// by full coalition enumeration, so efficiency
///   base_value + sum_j phi[j] == model(instance)
/// holds to floating-point accuracy. Feature count is capped at 12.
struct ShapleyRow {
    std::vector<double> phi;
    double base_value = 0.0;   // v(empty) = background-mean prediction
    double model_output = 0.0; // model(instance)
};

ShapleyRow shapley_exact(const FeatureModel& model, std::span<const double> instance,
                         std::span<const std::vector<double>> background);

/// Per-instance Shapley matrix plus the mean-|phi| aggregate used as flow
/// weights in feature-influence summaries.
struct AttributionReport {
    std::vector<std::vector<double>> phi; // [instances][features]
    double base_value = 0.0;
    std::vector<double> mean_abs;         // per feature
};

AttributionReport shapley_report(const FeatureModel& model,
                                 std::span<const std::vector<double>> instances,
                                 std::span<const std::vector<double>> background);

/// Least-squares surrogate with a degree-2 polynomial expansion (linear,
/// squares, pairwise products) over internally standardized features.
/// Rank-deficient designs fall back to ridge with a fixed small regularizer
/// and set ridge_fallback.
struct Surrogate {
    FeatureModel fn;
    double r_squared = 0.0;
    bool ridge_fallback = false;
};

Surrogate surrogate_fit(std::span<const std::vector<double>> features,
                        std::span<const double> target);

} // namespace noiselab
