#include "noiselab/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "noiselab/stats.hpp"

namespace noiselab {

namespace {

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f; // exact in double up to 22!
}

} // namespace

ShapleyRow shapley_exact(const FeatureModel& model, std::span<const double> instance,
                         std::span<const std::vector<double>> background) {
    const std::size_t k = instance.size();
    if (k == 0 || k > 12)
        throw std::invalid_argument("shapley_exact: feature count must be in [1, 12]");
    if (background.empty()) throw std::invalid_argument("shapley_exact: empty background");
    for (const auto& b : background)
        if (b.size() != k)
            throw std::invalid_argument("shapley_exact: background dimension mismatch");

    // v(S) for every coalition: background-mean output of the hybrid input.
    const std::size_t n_mask = std::size_t{1} << k;
    std::vector<double> v(n_mask, 0.0);
    std::vector<double> hybrid(k);
    for (std::size_t mask = 0; mask < n_mask; ++mask) {
        double acc = 0.0;
        for (const auto& b : background) {
            for (std::size_t j = 0; j < k; ++j)
                hybrid[j] = (mask >> j) & 1 ? instance[j] : b[j];
            acc += model(hybrid);
        }
        v[mask] = acc / static_cast<double>(background.size());
    }

    ShapleyRow row;
    row.phi.assign(k, 0.0);
    row.base_value = v[0];
    row.model_output = v[n_mask - 1];

    const double k_fact = factorial(k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        double phi = 0.0;
        for (std::size_t mask = 0; mask < n_mask; ++mask) {
            if (mask & bit) continue;
            const std::size_t s = static_cast<std::size_t>(std::popcount(mask));
            const double w = factorial(s) * factorial(k - s - 1) / k_fact;
            phi += w * (v[mask | bit] - v[mask]);
        }
        row.phi[j] = phi;
    }
    return row;
}

AttributionReport shapley_report(const FeatureModel& model,
                                 std::span<const std::vector<double>> instances,
                                 std::span<const std::vector<double>> background) {
    if (instances.empty()) throw std::invalid_argument("shapley_report: no instances");
    const std::size_t k = instances.front().size();

    AttributionReport rep;
    rep.phi.reserve(instances.size());
    rep.mean_abs.assign(k, 0.0);
    for (const auto& inst : instances) {
        ShapleyRow row = shapley_exact(model, inst, background);
        rep.base_value = row.base_value;
        for (std::size_t j = 0; j < k; ++j) rep.mean_abs[j] += std::abs(row.phi[j]);
        rep.phi.push_back(std::move(row.phi));
    }
    for (double& v : rep.mean_abs) v /= static_cast<double>(instances.size());
    return rep;
}

// ---------------------------------------------------------------------------
// Polynomial surrogate
// ---------------------------------------------------------------------------

namespace {

// Symmetric positive (semi-)definite solve via Cholesky; returns false when
// the factorization breaks down.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t kk = 0; kk < j; ++kk) d -= a[j * n + kk] * a[j * n + kk];
        if (d <= 0.0 || !std::isfinite(d)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t kk = 0; kk < j; ++kk) s -= a[i * n + kk] * a[j * n + kk];
            a[i * n + j] = s / l;
        }
    }
    for (std::size_t i = 0; i < n; ++i) { // L y = b
        double s = b[i];
        for (std::size_t kk = 0; kk < i; ++kk) s -= a[i * n + kk] * b[kk];
        b[i] = s / a[i * n + i];
    }
    out.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) { // L^T x = y
        double s = b[ii];
        for (std::size_t kk = ii + 1; kk < n; ++kk) s -= a[kk * n + ii] * out[kk];
        out[ii] = s / a[ii * n + ii];
    }
    return true;
}

std::vector<double> expand_poly2(std::span<const double> z) {
    const std::size_t k = z.size();
    std::vector<double> t;
    t.reserve(1 + 2 * k + k * (k - 1) / 2);
    t.push_back(1.0);
    for (double v : z) t.push_back(v);
    for (double v : z) t.push_back(v * v);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) t.push_back(z[i] * z[j]);
    return t;
}

} // namespace

Surrogate surrogate_fit(std::span<const std::vector<double>> features,
                        std::span<const double> target) {
    const std::size_t n = features.size();
    if (n == 0 || n != target.size())
        throw std::invalid_argument("surrogate_fit: feature/target size mismatch");
    const std::size_t k = features.front().size();
    if (k == 0) throw std::invalid_argument("surrogate_fit: no features");
    if (n <= k) throw std::invalid_argument("surrogate_fit: needs more rows than features");
    for (const auto& f : features)
        if (f.size() != k) throw std::invalid_argument("surrogate_fit: ragged feature rows");

    // Standardize; constant features map to 0 and drop out of the fit.
    std::vector<double> means(k, 0.0), scales(k, 1.0);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = features[i][j];
        means[j] = mean_of(col);
        const double s = stddev_of(col);
        scales[j] = s > 0.0 ? s : 1.0;
    }

    const std::size_t p = 1 + 2 * k + k * (k - 1) / 2;
    std::vector<std::vector<double>> design(n);
    std::vector<double> z(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) z[j] = (features[i][j] - means[j]) / scales[j];
        design[i] = expand_poly2(z);
    }

    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += design[i][a] * target[i];
            for (std::size_t b = a; b < p; ++b) xtx[a * p + b] += design[i][a] * design[i][b];
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx[a * p + b] = xtx[b * p + a];

    Surrogate out;
    std::vector<double> coeffs;
    if (!cholesky_solve(xtx, xty, p, coeffs)) {
        // Ridge fallback with a fixed small regularizer.
        constexpr double kRidge = 1e-6;
        for (std::size_t a = 0; a < p; ++a) xtx[a * p + a] += kRidge;
        if (!cholesky_solve(xtx, xty, p, coeffs))
            throw std::runtime_error("surrogate_fit: normal equations unsolvable");
        out.ridge_fallback = true;
    }

    double ss_res = 0.0, ss_tot = 0.0;
    const double my = mean_of(target);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t a = 0; a < p; ++a) fit += coeffs[a] * design[i][a];
        ss_res += (target[i] - fit) * (target[i] - fit);
        ss_tot += (target[i] - my) * (target[i] - my);
    }
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;

    out.fn = [means, scales, coeffs, k](std::span<const double> x) {
        if (x.size() != k) throw std::invalid_argument("surrogate: wrong feature count");
        std::vector<double> zz(k);
        for (std::size_t j = 0; j < k; ++j) zz[j] = (x[j] - means[j]) / scales[j];
        const std::vector<double> t = expand_poly2(zz);
        double acc = 0.0;
        for (std::size_t a = 0; a < t.size(); ++a) acc += coeffs[a] * t[a];
        return acc;
    };
    return out;
}

} // namespace noiselab
