#include "noiselab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "noiselab/errors.hpp"
#include "noiselab/stats.hpp"

namespace noiselab {

namespace {

void require_equal_nonempty(std::size_t a, std::size_t b, const char* op) {
    if (a != b) throw std::invalid_argument(std::string(op) + ": length mismatch");
    if (a == 0) throw std::invalid_argument(std::string(op) + ": empty input");
}

} // namespace

RegressionMetrics regression_metrics(std::span<const double> pred,
                                     std::span<const double> truth) {
    require_equal_nonempty(pred.size(), truth.size(), "regression_metrics");
    const std::size_t n = pred.size();

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred[i] - truth[i];
        sse += d * d;
    }
    RegressionMetrics m;
    m.rmse = std::sqrt(sse / static_cast<double>(n));

    const double mt = mean_of(truth);
    double ss_tot = 0.0;
    for (double t : truth) ss_tot += (t - mt) * (t - mt);
    if (ss_tot == 0.0)
        throw UndefinedStatistic("regression_metrics: truth has zero variance");
    m.r_squared = 1.0 - sse / ss_tot;
    // A constant prediction leaves the correlation undefined but not the
    // other metrics; report it as NaN instead of failing the whole record.
    try {
        m.pearson_r = pearson(pred, truth);
    } catch (const UndefinedStatistic&) {
        m.pearson_r = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

RegressionFit linear_fit(std::span<const double> x, std::span<const double> y) {
    require_equal_nonempty(x.size(), y.size(), "linear_fit");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("linear_fit: needs at least two points");

    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw UndefinedStatistic("linear_fit: constant regressor");

    RegressionFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += r * r;
    }
    f.r_squared = syy == 0.0 ? 0.0 : 1.0 - ss_res / syy;
    f.residual_stddev = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2)) : 0.0;
    f.slope_stderr = f.residual_stddev / std::sqrt(sxx);
    return f;
}

ResidualFit fit_residual_gaussian(std::span<const double> pred,
                                  std::span<const double> truth) {
    require_equal_nonempty(pred.size(), truth.size(), "fit_residual_gaussian");
    std::vector<double> d(pred.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = pred[i] - truth[i];
    ResidualFit f;
    f.mu = mean_of(d);
    f.sigma = stddev_of(d);
    return f;
}

EffectSize cohens_f2(double full_r2, double reduced_r2) {
    if (!(full_r2 < 1.0)) throw std::invalid_argument("cohens_f2: full R^2 must be < 1");
    if (reduced_r2 < 0.0 || reduced_r2 > full_r2)
        throw std::invalid_argument("cohens_f2: need 0 <= reduced R^2 <= full R^2");
    EffectSize e;
    e.f_squared = (full_r2 - reduced_r2) / (1.0 - full_r2);
    e.cls = e.f_squared >= 0.35  ? EffectClass::Large
            : e.f_squared >= 0.15 ? EffectClass::Medium
                                  : EffectClass::Small;
    return e;
}

EffectSize cohens_f2_single(double r2) {
    if (!(r2 < 1.0) || r2 < 0.0)
        throw std::invalid_argument("cohens_f2_single: R^2 must lie in [0, 1)");
    return cohens_f2(r2, 0.0);
}

std::string_view effect_class_name(EffectClass c) {
    switch (c) {
        case EffectClass::Small: return "Small";
        case EffectClass::Medium: return "Medium";
        case EffectClass::Large: return "Large";
    }
    return "Small";
}

// ---------------------------------------------------------------------------
// Student t
// ---------------------------------------------------------------------------

namespace {

// Continued fraction for the regularized incomplete beta (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_p_two_sided(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_p_two_sided: df must be > 0");
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    require_equal_nonempty(a.size(), b.size(), "paired_ttest");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_ttest: needs at least two pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double md = mean_of(d);
    const double sd = stddev_of(d);
    if (sd == 0.0) throw UndefinedStatistic("paired_ttest: zero-variance differences");
    TTestResult r;
    r.df = n - 1;
    r.t = md / (sd / std::sqrt(static_cast<double>(n)));
    r.p_two_sided = student_t_p_two_sided(r.t, static_cast<double>(r.df));
    return r;
}

// ---------------------------------------------------------------------------
// MMD and KDE
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const std::vector<double>& u, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        acc += d * d;
    }
    return acc;
}

double mean_kernel(std::span<const std::vector<double>> a,
                   std::span<const std::vector<double>> b, double gamma) {
    double acc = 0.0;
    for (const auto& u : a)
        for (const auto& v : b) acc += std::exp(-gamma * sq_dist(u, v));
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

} // namespace

double mmd_rbf(std::span<const std::vector<double>> sample_a,
               std::span<const std::vector<double>> sample_b,
               std::optional<double> bandwidth) {
    if (sample_a.empty() || sample_b.empty())
        throw std::invalid_argument("mmd_rbf: empty sample");
    const std::size_t dim = sample_a.front().size();
    for (const auto& v : sample_a)
        if (v.size() != dim) throw std::invalid_argument("mmd_rbf: inconsistent dimensions");
    for (const auto& v : sample_b)
        if (v.size() != dim) throw std::invalid_argument("mmd_rbf: inconsistent dimensions");

    double bw;
    if (bandwidth) {
        bw = *bandwidth;
        if (!(bw > 0.0)) throw std::invalid_argument("mmd_rbf: bandwidth must be > 0");
    } else {
        // Median heuristic over the pooled sample's pairwise distances.
        std::vector<const std::vector<double>*> pooled;
        pooled.reserve(sample_a.size() + sample_b.size());
        for (const auto& v : sample_a) pooled.push_back(&v);
        for (const auto& v : sample_b) pooled.push_back(&v);
        std::vector<double> dists;
        dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
        for (std::size_t i = 0; i < pooled.size(); ++i)
            for (std::size_t j = i + 1; j < pooled.size(); ++j)
                dists.push_back(std::sqrt(sq_dist(*pooled[i], *pooled[j])));
        bw = dists.empty() ? 1.0 : median_of(dists);
        if (bw <= 0.0) bw = 1.0; // all points coincide; any kernel width works
    }

    const double gamma = 1.0 / (2.0 * bw * bw);
    const double mmd2 = mean_kernel(sample_a, sample_a, gamma) -
                        2.0 * mean_kernel(sample_a, sample_b, gamma) +
                        mean_kernel(sample_b, sample_b, gamma);
    return std::max(0.0, mmd2);
}

std::vector<double> kde_1d(std::span<const double> points, std::span<const double> grid,
                           std::optional<double> bandwidth) {
    if (points.size() < 2) throw std::invalid_argument("kde_1d: needs at least two points");
    double h;
    if (bandwidth) {
        h = *bandwidth;
        if (!(h > 0.0)) throw std::invalid_argument("kde_1d: bandwidth must be > 0");
    } else {
        const double s = stddev_of(points);
        h = 1.06 * s * std::pow(static_cast<double>(points.size()), -0.2);
        if (!(h > 0.0))
            throw UndefinedStatistic("kde_1d: zero-spread points defeat auto bandwidth");
    }
    const double norm =
        1.0 / (static_cast<double>(points.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> density(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double p : points) {
            const double t = (grid[g] - p) / h;
            acc += std::exp(-0.5 * t * t);
        }
        density[g] = norm * acc;
    }
    return density;
}

// ---------------------------------------------------------------------------
// Classification report
// ---------------------------------------------------------------------------

ClassificationReport classification_report(std::span<const NoiseStrengths> pred,
                                           std::span<const NoiseStrengths> truth,
                                           std::span<const double> thresholds) {
    require_equal_nonempty(pred.size(), truth.size(), "classification_report");
    const std::size_t n = pred.size();

    ClassificationReport rep;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (pred[i].dominant() == truth[i].dominant()) ++hits;
    rep.dominant_accuracy = static_cast<double>(hits) / static_cast<double>(n);

    rep.thresholds.assign(thresholds.begin(), thresholds.end());
    rep.threshold_accuracy.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < kStrengthCount; ++c)
                if ((pred[i][c] >= t) == (truth[i][c] >= t)) ++agree;
        rep.threshold_accuracy.push_back(static_cast<double>(agree) /
                                         static_cast<double>(n * kStrengthCount));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// PSNR / SSIM
// ---------------------------------------------------------------------------

namespace {

std::vector<double> gaussian_window(std::size_t side, double sigma) {
    std::vector<double> w(side * side);
    const double c = (static_cast<double>(side) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const double dy = static_cast<double>(y) - c;
            const double dx = static_cast<double>(x) - c;
            w[y * side + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            sum += w[y * side + x];
        }
    }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

QualityMetrics reference_quality(const ImageTensor& x, const ImageTensor& ref) {
    if (!x.same_shape(ref)) throw std::invalid_argument("reference_quality: shape mismatch");
    if (x.data.empty()) throw std::invalid_argument("reference_quality: empty image");

    QualityMetrics q;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = x.data[i] - ref.data[i];
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(x.data.size());
    q.psnr_db = mse == 0.0 ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(1.0 / mse);

    // SSIM over densely sliding windows, valid positions only. Images
    // smaller than 11 pixels use the largest odd window that fits.
    std::size_t side = std::min<std::size_t>(11, std::min(x.height, x.width));
    if (side % 2 == 0) --side;
    if (side == 0) throw std::invalid_argument("reference_quality: degenerate image");
    const std::vector<double> w = gaussian_window(side, 1.5);
    constexpr double c1 = 0.01 * 0.01; // (K1 * L)^2, L = 1
    constexpr double c2 = 0.03 * 0.03;

    double ssim_sum = 0.0;
    std::size_t windows = 0;
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t y0 = 0; y0 + side <= x.height; ++y0) {
            for (std::size_t x0 = 0; x0 + side <= x.width; ++x0) {
                double mx = 0.0, my = 0.0;
                for (std::size_t dy = 0; dy < side; ++dy)
                    for (std::size_t dx = 0; dx < side; ++dx) {
                        const double wt = w[dy * side + dx];
                        mx += wt * x.at(c, y0 + dy, x0 + dx);
                        my += wt * ref.at(c, y0 + dy, x0 + dx);
                    }
                double vx = 0.0, vy = 0.0, cov = 0.0;
                for (std::size_t dy = 0; dy < side; ++dy)
                    for (std::size_t dx = 0; dx < side; ++dx) {
                        const double wt = w[dy * side + dx];
                        const double ax = x.at(c, y0 + dy, x0 + dx) - mx;
                        const double ay = ref.at(c, y0 + dy, x0 + dx) - my;
                        vx += wt * ax * ax;
                        vy += wt * ay * ay;
                        cov += wt * ax * ay;
                    }
                const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
                const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
                ssim_sum += num / den;
                ++windows;
            }
        }
    }
    q.ssim = windows > 0 ? ssim_sum / static_cast<double>(windows) : 1.0;
    return q;
}

// ---------------------------------------------------------------------------
// Correlation matrix
// ---------------------------------------------------------------------------

CorrelationMatrix correlation_matrix(std::span<const NamedColumn> columns) {
    if (columns.empty()) throw std::invalid_argument("correlation_matrix: no columns");
    const std::size_t n = columns.front().values.size();
    if (n < 2) throw std::invalid_argument("correlation_matrix: columns need >= 2 rows");
    for (const auto& c : columns)
        if (c.values.size() != n)
            throw std::invalid_argument("correlation_matrix: column length mismatch");

    const std::size_t k = columns.size();
    CorrelationMatrix m;
    m.names.reserve(k);
    for (const auto& c : columns) m.names.push_back(c.name);
    m.r.assign(k * k, std::numeric_limits<double>::quiet_NaN());

    std::vector<bool> defined(k);
    for (std::size_t i = 0; i < k; ++i) defined[i] = variance_of(columns[i].values) > 0.0;

    for (std::size_t i = 0; i < k; ++i) {
        if (!defined[i]) continue;
        m.r[i * k + i] = 1.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            if (!defined[j]) continue;
            const double r = pearson(columns[i].values, columns[j].values);
            m.r[i * k + j] = r;
            m.r[j * k + i] = r;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Deterministic.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
    eigvecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i * n + p];
                    const double aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p * n + i];
                    const double aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = eigvecs[i * n + p];
                    const double viq = eigvecs[i * n + q];
                    eigvecs[i * n + p] = c * vip - s * viq;
                    eigvecs[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

} // namespace

Pca2d pca_2d(std::span<const std::vector<double>> embeddings) {
    if (embeddings.size() < 3) throw std::invalid_argument("pca_2d: needs >= 3 embeddings");
    const std::size_t d = embeddings.front().size();
    if (d < 2) throw std::invalid_argument("pca_2d: dimension must be >= 2");
    for (const auto& e : embeddings)
        if (e.size() != d) throw std::invalid_argument("pca_2d: inconsistent dimensions");

    const std::size_t n = embeddings.size();
    Pca2d out;
    out.mean.assign(d, 0.0);
    for (const auto& e : embeddings)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += e[j];
    for (double& v : out.mean) v /= static_cast<double>(n);

    std::vector<double> cov(d * d, 0.0);
    for (const auto& e : embeddings) {
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = e[i] - out.mean[i];
            for (std::size_t j = i; j < d; ++j)
                cov[i * d + j] += ci * (e[j] - out.mean[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= static_cast<double>(n - 1);
            cov[j * d + i] = cov[i * d + j];
        }

    std::vector<double> eigvals, eigvecs;
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += cov[i * d + i];
    jacobi_eigen(cov, d, eigvals, eigvecs);

    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

    for (std::size_t axis = 0; axis < 2; ++axis) {
        out.axes[axis].assign(d, 0.0);
        const std::size_t col = idx[axis];
        const double lambda = std::max(0.0, eigvals[col]);
        out.explained_ratio[axis] = total > 0.0 ? lambda / total : 0.0;
        if (axis == 1 && lambda <= 1e-12 * std::max(1.0, total)) {
            out.degenerate = true;
            continue; // rank < 2: second axis stays zero
        }
        for (std::size_t i = 0; i < d; ++i) out.axes[axis][i] = eigvecs[i * d + col];
        // Deterministic sign: largest-magnitude component positive.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(out.axes[axis][i]) > std::abs(out.axes[axis][arg])) arg = i;
        if (out.axes[axis][arg] < 0.0)
            for (double& v : out.axes[axis]) v = -v;
    }

    out.coords.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t axis = 0; axis < 2; ++axis) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                acc += (embeddings[r][j] - out.mean[j]) * out.axes[axis][j];
            out.coords[r][axis] = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Depth analysis
// ---------------------------------------------------------------------------

namespace {

// Least squares for a small column-major design matrix via normal equations.
// Returns coefficients; fills r_squared and, optionally, coefficient
// standard errors (sigma^2 * (X^T X)^-1 diagonal).
std::vector<double> small_ols(const std::vector<std::vector<double>>& cols,
                              std::span<const double> y, double* r_squared,
                              std::vector<double>* stderrs) {
    const std::size_t k = cols.size();
    const std::size_t n = y.size();
    std::vector<double> xtx(k * k, 0.0), xty(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += cols[i][r] * cols[j][r];
            xtx[i * k + j] = acc;
            xtx[j * k + i] = acc;
        }
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += cols[i][r] * y[r];
        xty[i] = acc;
    }

    // Gauss-Jordan inversion with partial pivoting.
    std::vector<double> inv(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;
    std::vector<double> m = xtx;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(m[r * k + col]) > std::abs(m[piv * k + col])) piv = r;
        if (std::abs(m[piv * k + col]) < 1e-12)
            throw UndefinedStatistic("ols: singular design matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < k; ++c) {
                std::swap(m[piv * k + c], m[col * k + c]);
                std::swap(inv[piv * k + c], inv[col * k + c]);
            }
        }
        const double d = m[col * k + col];
        for (std::size_t c = 0; c < k; ++c) {
            m[col * k + c] /= d;
            inv[col * k + c] /= d;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = m[r * k + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < k; ++c) {
                m[r * k + c] -= f * m[col * k + c];
                inv[r * k + c] -= f * inv[col * k + c];
            }
        }
    }

    std::vector<double> beta(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) beta[i] += inv[i * k + j] * xty[j];

    const double my = mean_of(y);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double fit = 0.0;
        for (std::size_t i = 0; i < k; ++i) fit += beta[i] * cols[i][r];
        ss_res += (y[r] - fit) * (y[r] - fit);
        ss_tot += (y[r] - my) * (y[r] - my);
    }
    if (r_squared) *r_squared = ss_tot == 0.0 ? 0.0 : 1.0 - ss_res / ss_tot;
    if (stderrs) {
        stderrs->assign(k, 0.0);
        const double dof = static_cast<double>(n) - static_cast<double>(k);
        const double sigma2 = dof > 0.0 ? ss_res / dof : 0.0;
        for (std::size_t i = 0; i < k; ++i)
            (*stderrs)[i] = std::sqrt(std::max(0.0, sigma2 * inv[i * k + i]));
    }
    return beta;
}

} // namespace

DepthAnalysis depth_analysis(std::span<const double> depth, std::span<const double> value,
                             std::span<const int> arm, std::string arm_a_name,
                             std::string arm_b_name) {
    require_equal_nonempty(depth.size(), value.size(), "depth_analysis");
    if (arm.size() != depth.size())
        throw std::invalid_argument("depth_analysis: arm indicator length mismatch");
    const std::size_t n = depth.size();
    if (n < 5) throw std::invalid_argument("depth_analysis: too few observations");

    std::vector<double> da, va, db, vb;
    for (std::size_t i = 0; i < n; ++i) {
        if (arm[i] == 0) {
            da.push_back(depth[i]);
            va.push_back(value[i]);
        } else {
            db.push_back(depth[i]);
            vb.push_back(value[i]);
        }
    }
    if (da.size() < 3 || db.size() < 3)
        throw std::invalid_argument("depth_analysis: each arm needs >= 3 observations");

    DepthAnalysis out;
    out.arm_a = {std::move(arm_a_name), linear_fit(da, va)};
    out.arm_b = {std::move(arm_b_name), linear_fit(db, vb)};

    // Full model: value ~ 1 + depth + arm + depth*arm.
    std::vector<std::vector<double>> cols(4, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = 1.0;
        cols[1][i] = depth[i];
        cols[2][i] = static_cast<double>(arm[i]);
        cols[3][i] = depth[i] * static_cast<double>(arm[i]);
    }
    std::vector<double> se;
    std::vector<double> beta = small_ols(cols, value, &out.full_r2, &se);

    // Reduced model: value ~ 1 + depth.
    std::vector<std::vector<double>> cols_red = {cols[0], cols[1]};
    small_ols(cols_red, value, &out.reduced_r2, nullptr);

    out.interaction_t = se[3] > 0.0 ? beta[3] / se[3] : 0.0;
    const double dof = static_cast<double>(n) - 4.0;
    out.interaction_p = dof > 0.0 ? student_t_p_two_sided(out.interaction_t, dof) : 1.0;

    const double full = std::min(out.full_r2, 1.0 - 1e-15);
    const double reduced = std::clamp(out.reduced_r2, 0.0, full);
    out.intervention_effect = cohens_f2(full, reduced);
    return out;
}

} // namespace noiselab
