#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "noiselab/analysis.hpp"
#include "noiselab/engine.hpp"
#include "noiselab/errors.hpp"
#include "noiselab/shapley.hpp"
#include "noiselab/stats.hpp"
#include "noiselab/textures.hpp"
#include "oracles.hpp"

using namespace noiselab;

namespace {

std::vector<double> randn(std::size_t n, Sampler& s, double mu = 0.0, double sd = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = s.normal(mu, sd);
    return v;
}

} // namespace

TEST_CASE("regression_metrics: exact cases and loop oracle") {
    const std::vector<double> truth = {0.1, 0.4, 0.2, 0.9, 0.6};
    {
        const RegressionMetrics m = regression_metrics(truth, truth);
        CHECK(m.rmse == 0.0);
        CHECK(m.r_squared == 1.0);
        CHECK(m.pearson_r == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        const std::vector<double> flat(truth.size(), mean_of(truth));
        const RegressionMetrics m = regression_metrics(flat, truth);
        CHECK(m.r_squared == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::isnan(m.pearson_r)); // constant prediction: r undefined
    }
    {
        auto s = RngStream::root(1).child("r", 0).sampler();
        const std::vector<double> p = randn(100, s, 0.4, 0.2);
        const std::vector<double> t = randn(100, s, 0.5, 0.25);
        const RegressionMetrics m = regression_metrics(p, t);
        const oracles::Regression o = oracles::regression(p, t);
        CHECK(std::abs(m.rmse - o.rmse) < 1e-12);
        CHECK(std::abs(m.r_squared - o.r_squared) < 1e-12);
        CHECK(std::abs(m.pearson_r - o.pearson) < 1e-12);
    }
    const std::vector<double> pred = {1, 2, 3};
    const std::vector<double> flat_truth = {2, 2, 2};
    CHECK_THROWS_AS(regression_metrics(pred, flat_truth), UndefinedStatistic);
}

TEST_CASE("linear_fit: exact line, flat response, sampling distribution") {
    {
        const std::vector<double> x = {0, 1, 2, 3, 4};
        std::vector<double> y;
        for (double v : x) y.push_back(2.0 * v + 1.0);
        const RegressionFit f = linear_fit(x, y);
        CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        const std::vector<double> x = {0, 1, 2, 3};
        const std::vector<double> y = {5, 5, 5, 5};
        const RegressionFit f = linear_fit(x, y);
        CHECK(f.slope == 0.0);
        CHECK(f.r_squared == 0.0);
    }
    {
        // beta = 0.01 per um over a 100..800 um grid with gaussian noise.
        auto s = RngStream::root(2).child("n", 0).sampler();
        std::vector<double> x, y;
        for (int d = 100; d <= 800; d += 10) {
            x.push_back(d);
            y.push_back(0.01 * d + 0.3 + s.normal(0.0, 0.5));
        }
        const RegressionFit f = linear_fit(x, y);
        CHECK(std::abs(f.slope - 0.01) <= 3.0 * f.slope_stderr);
        const oracles::Line o = oracles::line_fit(x, y);
        CHECK(std::abs(f.slope - o.slope) < 1e-12);
        CHECK(std::abs(f.intercept - o.intercept) < 1e-12);
        CHECK(std::abs(f.r_squared - o.r_squared) < 1e-12);
    }
    const std::vector<double> cx = {1, 1, 1};
    const std::vector<double> cy = {1, 2, 3};
    CHECK_THROWS_AS(linear_fit(cx, cy), UndefinedStatistic);
}

TEST_CASE("fit_residual_gaussian") {
    const std::vector<double> t = {0.2, 0.4, 0.8};
    {
        const ResidualFit f = fit_residual_gaussian(t, t);
        CHECK(f.mu == 0.0);
        CHECK(f.sigma == 0.0);
    }
    {
        std::vector<double> p = t;
        for (double& v : p) v += 0.1;
        const ResidualFit f = fit_residual_gaussian(p, t);
        CHECK(f.mu == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(f.sigma == doctest::Approx(0.0).epsilon(1e-9));
    }
    {
        auto s = RngStream::root(3).child("r", 0).sampler();
        const std::size_t n = 10000;
        std::vector<double> truth(n, 0.0);
        std::vector<double> pred = randn(n, s, 0.02, 0.05);
        const ResidualFit f = fit_residual_gaussian(pred, truth);
        CHECK(std::abs(f.mu - 0.02) < 0.0025);  // 5 sigma of the mean
        CHECK(std::abs(f.sigma - 0.05) < 0.003);
    }
}

TEST_CASE("cohens_f2 arithmetic and class boundaries") {
    CHECK(cohens_f2(0.4, 0.4).f_squared == 0.0);
    CHECK(cohens_f2(0.4, 0.4).cls == EffectClass::Small);

    const EffectSize large = cohens_f2(0.5, 0.3);
    CHECK(large.f_squared == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(large.cls == EffectClass::Large);

    const EffectSize small = cohens_f2(0.2, 0.1);
    CHECK(small.f_squared == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(small.cls == EffectClass::Small);

    // Boundaries are closed on the upper class: 0.35 -> Large, 0.15 -> Medium.
    CHECK(cohens_f2(0.5, 0.325).f_squared == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(cohens_f2(0.5, 0.325).cls == EffectClass::Large);
    CHECK(cohens_f2(0.5, 0.425).f_squared == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(cohens_f2(0.5, 0.425).cls == EffectClass::Medium);

    CHECK(cohens_f2_single(0.5).f_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cohens_f2(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cohens_f2(0.5, 0.6), std::invalid_argument);
    CHECK(effect_class_name(EffectClass::Large) == "Large");
}

TEST_CASE("paired_ttest: exact t values and calibrated p") {
    {
        // Alternating +-1 differences: zero mean, nonzero spread.
        const std::vector<double> a = {1, 0, 1, 0, 1, 0};
        const std::vector<double> b = {0, 1, 0, 1, 0, 1};
        const TTestResult r = paired_ttest(a, b);
        CHECK(r.t == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(r.p_two_sided == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.df == 5);
    }
    {
        const std::vector<double> a = {0.9, 1.1, 1.0, 1.0};
        const std::vector<double> b = {0.0, 0.0, 0.0, 0.0};
        const TTestResult r = paired_ttest(a, b);
        CHECK(r.t == doctest::Approx(20.0 * std::sqrt(1.5)).epsilon(1e-9));
        CHECK(std::abs(r.t - oracles::paired_t(a, b)) < 1e-9);
        CHECK(r.p_two_sided < 3e-4);
    }
    {
        const std::vector<double> a = {1, 1, 1};
        const std::vector<double> b = {0, 0, 0};
        CHECK_THROWS_AS(paired_ttest(a, b), UndefinedStatistic);
    }
}

TEST_CASE("student t p-values hit textbook quantiles") {
    CHECK(student_t_p_two_sided(2.776445, 4.0) == doctest::Approx(0.05).epsilon(2e-4));
    CHECK(student_t_p_two_sided(12.7062, 1.0) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(student_t_p_two_sided(2.262157, 9.0) == doctest::Approx(0.05).epsilon(2e-4));
    CHECK(student_t_p_two_sided(0.0, 7.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("paired_ttest null p-values are uniform") {
    auto s = RngStream::root(4).child("null", 0).sampler();
    std::vector<double> pvals;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::vector<double> a = randn(100, s);
        const std::vector<double> b = randn(100, s);
        pvals.push_back(paired_ttest(a, b).p_two_sided);
    }
    std::sort(pvals.begin(), pvals.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        const double ecdf_hi = static_cast<double>(i + 1) / pvals.size();
        const double ecdf_lo = static_cast<double>(i) / pvals.size();
        ks = std::max({ks, std::abs(ecdf_hi - pvals[i]), std::abs(pvals[i] - ecdf_lo)});
    }
    CHECK(ks < 0.05);
}

TEST_CASE("mmd_rbf: identity, symmetry, closed form, calibration") {
    auto s = RngStream::root(5).child("m", 0).sampler();
    std::vector<std::vector<double>> a, b;
    for (int i = 0; i < 200; ++i) a.push_back(randn(8, s));
    for (int i = 0; i < 200; ++i) b.push_back(randn(8, s));

    CHECK(mmd_rbf(a, a) <= 1e-12);
    CHECK(mmd_rbf(a, b) == doctest::Approx(mmd_rbf(b, a)).epsilon(1e-14));

    // Same toy distribution: the V-statistic bias term dominates, < 0.01.
    CHECK(mmd_rbf(a, b) < 0.01);

    // Unit mean shift in every coordinate separates clearly.
    std::vector<std::vector<double>> shifted;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v = randn(8, s);
        for (double& x : v) x += 1.0;
        shifted.push_back(std::move(v));
    }
    CHECK(mmd_rbf(a, shifted) > 0.1);

    // Two one-point samples with explicit bandwidth: hand-computable.
    const std::vector<std::vector<double>> p = {{0.0, 0.0}};
    const std::vector<std::vector<double>> q = {{1.0, 0.0}};
    const double expected = 2.0 - 2.0 * std::exp(-0.5);
    CHECK(mmd_rbf(p, q, 1.0) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(mmd_rbf({}, a), std::invalid_argument);
    CHECK_THROWS_AS(mmd_rbf(a, b, -1.0), std::invalid_argument);
}

TEST_CASE("kde_1d: point mass, closed forms, normalization") {
    {
        const std::vector<double> pts(10, 0.5);
        const std::vector<double> grid = {0.3, 0.5, 0.7};
        const std::vector<double> d = kde_1d(pts, grid, 0.1);
        const double peak = 1.0 / (0.1 * std::sqrt(2.0 * std::numbers::pi));
        CHECK(d[1] == doctest::Approx(peak).epsilon(1e-12));
        CHECK(d[0] == doctest::Approx(peak * std::exp(-2.0)).epsilon(1e-12));
        CHECK(d[0] == doctest::Approx(d[2]).epsilon(1e-12));
        CHECK_THROWS_AS(kde_1d(pts, grid), UndefinedStatistic); // auto bandwidth degenerates
    }
    {
        const std::vector<double> pts = {0.2, 0.8};
        const std::vector<double> grid = {0.5};
        const double h = 0.25;
        const std::vector<double> d = kde_1d(pts, grid, h);
        const double phi = std::exp(-0.5 * (0.3 / h) * (0.3 / h)) /
                           (h * std::sqrt(2.0 * std::numbers::pi));
        CHECK(d[0] == doctest::Approx(phi).epsilon(1e-12)); // both points equidistant
    }
    {
        auto s = RngStream::root(6).child("k", 0).sampler();
        const std::vector<double> pts = randn(200, s);
        std::vector<double> grid;
        for (double g = -6.0; g <= 6.0; g += 0.01) grid.push_back(g);
        const std::vector<double> d = kde_1d(pts, grid);
        double integral = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i)
            integral += 0.5 * (d[i] + d[i - 1]) * (grid[i] - grid[i - 1]);
        CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
    }
    CHECK_THROWS_AS(kde_1d(std::vector<double>{1.0}, std::vector<double>{0.0}),
                    std::invalid_argument);
}

TEST_CASE("classification_report: exact cases, tie rule, loop oracle") {
    const std::vector<double> thresholds = {0.0, 0.25, 0.5, 0.75, 1.0};
    {
        std::vector<NoiseStrengths> t(10);
        auto s = RngStream::root(7).child("c", 0).sampler();
        for (auto& v : t)
            for (std::size_t c = 0; c < kStrengthCount; ++c) v[c] = s.uniform01();
        const ClassificationReport r = classification_report(t, t, thresholds);
        CHECK(r.dominant_accuracy == 1.0);
        for (double acc : r.threshold_accuracy) CHECK(acc == 1.0);
    }
    {
        // Uniform predictions tie everywhere; ties break to the first
        // canonical component (gaussian).
        std::vector<NoiseStrengths> pred(1), truth(1);
        for (std::size_t c = 0; c < kStrengthCount; ++c) pred[0][c] = 1.0 / 6.0;
        truth[0][static_cast<std::size_t>(Primitive::Gaussian)] = 1.0;
        CHECK(classification_report(pred, truth, thresholds).dominant_accuracy == 1.0);
        truth[0] = NoiseStrengths{};
        truth[0][static_cast<std::size_t>(Primitive::Clean)] = 1.0;
        CHECK(classification_report(pred, truth, thresholds).dominant_accuracy == 0.0);
    }
    {
        auto s = RngStream::root(8).child("c", 0).sampler();
        std::vector<NoiseStrengths> pred(500), truth(500);
        for (std::size_t i = 0; i < 500; ++i)
            for (std::size_t c = 0; c < kStrengthCount; ++c) {
                pred[i][c] = s.uniform01();
                truth[i][c] = s.uniform01();
            }
        const ClassificationReport r = classification_report(pred, truth, thresholds);
        const oracles::Classification o = oracles::classification(pred, truth, thresholds);
        CHECK(r.dominant_accuracy == o.dominant);
        for (std::size_t t = 0; t < thresholds.size(); ++t)
            CHECK(r.threshold_accuracy[t] == o.per_threshold[t]);
    }
}

TEST_CASE("reference_quality: identity, known mse, ssim oracle") {
    const ImageTensor ref(1, 32, 32, 0.5);
    {
        const QualityMetrics q = reference_quality(ref, ref);
        CHECK(std::isinf(q.psnr_db));
        CHECK(q.ssim == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        ImageTensor x(1, 32, 32, 0.6);
        const QualityMetrics q = reference_quality(x, ref);
        CHECK(q.psnr_db == doctest::Approx(20.0).epsilon(1e-9)); // mse = 0.01
    }
    {
        ImageTensor checker(1, 64, 64);
        for (std::size_t y = 0; y < 64; ++y)
            for (std::size_t x = 0; x < 64; ++x)
                checker.at(0, y, x) = ((y / 8 + x / 8) % 2 == 0) ? 0.25 : 0.75;
        const ImageTensor noisy =
            apply_gaussian(checker, 0.1, RngStream::root(9).child("g", 0));
        const QualityMetrics q = reference_quality(noisy, checker);
        CHECK(q.ssim == doctest::Approx(oracles::ssim(noisy, checker)).epsilon(1e-6));
        CHECK(q.ssim < 1.0);
        CHECK(q.ssim > 0.0);
    }
    CHECK_THROWS_AS(reference_quality(ref, ImageTensor(1, 8, 8, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("shapley_exact: linear closed form, dummy, symmetry, efficiency") {
    const std::vector<double> w = {0.5, -1.2, 2.0, 0.0, 0.7};
    const FeatureModel linear = [&](std::span<const double> x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
        return acc;
    };
    auto s = RngStream::root(10).child("bg", 0).sampler();
    std::vector<std::vector<double>> background;
    for (int i = 0; i < 20; ++i) background.push_back(randn(5, s));
    std::vector<double> bg_mean(5, 0.0);
    for (const auto& b : background)
        for (std::size_t j = 0; j < 5; ++j) bg_mean[j] += b[j] / background.size();

    const std::vector<double> instance = {1.0, -0.5, 0.3, 2.0, 0.0};
    const ShapleyRow row = shapley_exact(linear, instance, background);

    for (std::size_t j = 0; j < 5; ++j)
        CHECK(row.phi[j] == doctest::Approx(w[j] * (instance[j] - bg_mean[j])).epsilon(1e-9));
    // w[3] = 0 makes feature 3 a dummy.
    CHECK(row.phi[3] == 0.0);

    double sum = row.base_value;
    for (double p : row.phi) sum += p;
    CHECK(sum == doctest::Approx(row.model_output).epsilon(1e-9));

    // Symmetric model and background: phi_0 == phi_1.
    const FeatureModel sym = [](std::span<const double> x) { return x[0] + x[1]; };
    std::vector<std::vector<double>> sym_bg;
    for (int i = 0; i < 8; ++i) {
        const double v = 0.1 * i;
        sym_bg.push_back({v, v});
    }
    const ShapleyRow srow = shapley_exact(sym, std::vector<double>{0.6, 0.6}, sym_bg);
    CHECK(srow.phi[0] == srow.phi[1]);

    CHECK_THROWS_AS(shapley_exact(linear, std::vector<double>(13, 0.0), background),
                    std::invalid_argument);
    CHECK_THROWS_AS(shapley_exact(linear, instance, {}), std::invalid_argument);
}

TEST_CASE("surrogate_fit: exact recovery, interactions, null target") {
    auto s = RngStream::root(11).child("f", 0).sampler();
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 400; ++i) rows.push_back(randn(5, s, 0.0, 2.0));

    {
        std::vector<double> target;
        for (const auto& r : rows) target.push_back(3.0 + 0.5 * r[0] - 1.5 * r[3]);
        const Surrogate f = surrogate_fit(rows, target);
        CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-9));
        for (int i = 0; i < 10; ++i)
            CHECK(f.fn(rows[i]) == doctest::Approx(target[i]).epsilon(1e-9));
        CHECK_FALSE(f.ridge_fallback);
    }
    {
        std::vector<double> target;
        for (const auto& r : rows) target.push_back(r[0] * r[1]);
        const Surrogate f = surrogate_fit(rows, target);
        CHECK(f.r_squared > 0.99);
    }
    {
        std::vector<double> target;
        for (std::size_t i = 0; i < rows.size(); ++i) target.push_back(s.normal());
        std::vector<std::vector<double>> big_rows(1000);
        std::vector<double> big_target(1000);
        for (auto& r : big_rows) r = randn(5, s);
        for (auto& t : big_target) t = s.normal();
        const Surrogate f = surrogate_fit(big_rows, big_target);
        CHECK(f.r_squared < 0.1);
    }
    CHECK_THROWS_AS(
        surrogate_fit(std::vector<std::vector<double>>{{1.0, 2.0}}, std::vector<double>{1.0}),
        std::invalid_argument);
}

TEST_CASE("correlation_matrix: diagonal, anti-correlation, nulls, missing") {
    auto s = RngStream::root(12).child("c", 0).sampler();
    NamedColumn x{"x", randn(1000, s)};
    NamedColumn negx{"negx", {}};
    for (double v : x.values) negx.values.push_back(-v);
    NamedColumn indep{"indep", randn(1000, s)};
    NamedColumn flat{"flat", std::vector<double>(1000, 3.0)};

    const std::vector<NamedColumn> cols = {x, negx, indep, flat};
    const CorrelationMatrix m = correlation_matrix(cols);
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(m.at(0, 2)) < 0.1);
    CHECK(std::isnan(m.at(0, 3)));
    CHECK(std::isnan(m.at(3, 3)));
    CHECK(m.at(1, 0) == m.at(0, 1));
}

TEST_CASE("pca_2d: planar embedding, isotropy, duplicates, degeneracy") {
    auto s = RngStream::root(13).child("p", 0).sampler();
    {
        // Points on a random 2-D plane in 8 dimensions reconstruct exactly.
        const std::vector<double> u = randn(8, s), v = randn(8, s);
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 40; ++i) {
            const double a = s.normal(), b = s.normal();
            std::vector<double> p(8);
            for (std::size_t j = 0; j < 8; ++j) p[j] = 0.3 + a * u[j] + b * v[j];
            pts.push_back(std::move(p));
        }
        const Pca2d out = pca_2d(pts);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                const double recon = out.mean[j] + out.coords[i][0] * out.axes[0][j] +
                                     out.coords[i][1] * out.axes[1][j];
                CHECK(recon == doctest::Approx(pts[i][j]).epsilon(1e-9));
            }
        }
        CHECK(out.explained_ratio[0] + out.explained_ratio[1] ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    {
        std::vector<std::vector<double>> cloud;
        for (int i = 0; i < 4000; ++i) cloud.push_back(randn(16, s));
        const Pca2d out = pca_2d(cloud);
        CHECK(out.explained_ratio[0] == doctest::Approx(1.0 / 16).epsilon(0.35));
        CHECK(out.explained_ratio[1] == doctest::Approx(1.0 / 16).epsilon(0.35));
        CHECK_FALSE(out.degenerate);
    }
    {
        std::vector<std::vector<double>> dup = {{1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, 2}};
        const Pca2d out = pca_2d(dup);
        CHECK(out.coords[0][0] == out.coords[2][0]);
        CHECK(out.coords[0][1] == out.coords[2][1]);
    }
    {
        // Collinear points: rank 1.
        std::vector<std::vector<double>> line;
        for (int i = 0; i < 10; ++i) line.push_back({1.0 * i, 2.0 * i, -1.0 * i});
        const Pca2d out = pca_2d(line);
        CHECK(out.degenerate);
        for (const auto& c : out.coords) CHECK(c[1] == 0.0);
    }
    CHECK_THROWS_AS(pca_2d(std::vector<std::vector<double>>{{1, 2}, {3, 4}}),
                    std::invalid_argument);
}

TEST_CASE("depth_analysis: constructed two-arm comparison") {
    auto s = RngStream::root(14).child("d", 0).sampler();
    std::vector<double> depth, value;
    std::vector<int> arm;
    for (int rep = 0; rep < 4; ++rep) {
        for (int d = 100; d <= 800; d += 25) {
            depth.push_back(d);
            value.push_back(0.01 * d + 1.0 + s.normal(0.0, 0.4));
            arm.push_back(0);
            depth.push_back(d);
            value.push_back(3.0 + s.normal(0.0, 0.4));
            arm.push_back(1);
        }
    }
    const DepthAnalysis out = depth_analysis(depth, value, arm, "fixed", "gained");
    CHECK(std::abs(out.arm_a.fit.slope - 0.01) <= 3.0 * out.arm_a.fit.slope_stderr);
    CHECK(std::abs(out.arm_b.fit.slope) <= 3.0 * out.arm_b.fit.slope_stderr);
    CHECK(out.interaction_p < 0.001);
    CHECK(out.intervention_effect.cls == EffectClass::Large);
    CHECK(out.arm_a.arm == "fixed");

    // Identical arms: no interaction effect.
    std::vector<double> v2;
    std::vector<int> a2;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        v2.push_back(0.005 * depth[i] + s.normal(0.0, 0.3));
        a2.push_back(static_cast<int>(i % 2));
    }
    const DepthAnalysis null_out = depth_analysis(depth, v2, a2);
    CHECK(null_out.intervention_effect.cls == EffectClass::Small);
    CHECK(null_out.interaction_p > 0.01);
}
