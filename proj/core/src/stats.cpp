#include "noiselab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "noiselab/errors.hpp"

namespace noiselab {

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace

SummaryStats summary_stats(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("summary_stats: empty input");
    SummaryStats s;
    s.mean = mean_of(values);
    s.stddev = stddev_of(values);
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    s.min = *mn;
    s.max = *mx;

    std::vector<double> work(values.begin(), values.end());
    s.median = median_inplace(work);
    for (double& v : work) v = std::abs(v - s.median);
    s.mad = median_inplace(work);
    return s;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_of: empty input");
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double variance_of(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("variance_of: empty input");
    if (n < 2) return 0.0;
    const double m = mean_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return acc / static_cast<double>(n - 1);
}

double stddev_of(std::span<const double> values) { return std::sqrt(variance_of(values)); }

double median_of(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median_of: empty input");
    std::vector<double> work(values.begin(), values.end());
    return median_inplace(work);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw UndefinedStatistic("pearson: needs at least two points");
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw UndefinedStatistic("pearson: zero-variance input");
    return sab / std::sqrt(saa * sbb);
}

} // namespace noiselab
