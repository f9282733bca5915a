#pragma once

#include <cstddef>
#include <span>

namespace noiselab {

struct SummaryStats {
    double mean = 0.0;
    double stddev = 0.0; // unbiased, n-1 denominator; 0 for n == 1
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    double mad = 0.0; // median absolute deviation from the median
};

/// Throws std::invalid_argument on empty input.
SummaryStats summary_stats(std::span<const double> values);

double mean_of(std::span<const double> values);
double variance_of(std::span<const double> values); // unbiased; 0 for n < 2
double stddev_of(std::span<const double> values);
double median_of(std::span<const double> values);

/// Pearson correlation; throws UndefinedStatistic when either side has zero
/// variance or fewer than two points.
double pearson(std::span<const double> a, std::span<const double> b);

} // namespace noiselab
