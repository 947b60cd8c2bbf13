#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tcldro/stat_quantiles.hpp"

using namespace tcldro;

TEST_CASE("t quantile closed forms") {
    // median is zero for every dof
    for (int k : {1, 2, 7, 100}) CHECK(t_quantile(0.5, k) == Catch::Approx(0.0).margin(1e-12));

    // dof 1 is Cauchy: quantile = tan(pi (p - 1/2))
    for (double p : {0.6, 0.9, 0.975, 0.999}) {
        const double expected = std::tan(M_PI * (p - 0.5));
        CHECK(t_quantile(p, 1) == Catch::Approx(expected).margin(1e-6 * (1.0 + std::fabs(expected))));
    }
    CHECK(t_quantile(0.975, 1) == Catch::Approx(12.7062).margin(1e-3));

    // normal limit
    CHECK(t_quantile(0.975, 1000000) == Catch::Approx(1.95996).margin(1e-3));

    CHECK_THROWS_AS(t_quantile(0.0, 3), domain_error);
    CHECK_THROWS_AS(t_quantile(1.0, 3), domain_error);
    CHECK_THROWS_AS(t_quantile(0.5, 0), domain_error);
}

TEST_CASE("chi-square quantile closed forms") {
    // dof 2: CDF = 1 - exp(-x/2), quantile = -2 ln(1 - p)
    CHECK(chi2_quantile(0.5, 2) == Catch::Approx(2.0 * std::log(2.0)).margin(1e-9));
    for (double p : {0.1, 0.9})
        CHECK(chi2_quantile(p, 2) == Catch::Approx(-2.0 * std::log1p(-p)).margin(1e-9));

    // monotone in p
    double prev = 0.0;
    for (double p : {0.05, 0.2, 0.5, 0.8, 0.99}) {
        const double q = chi2_quantile(p, 7);
        CHECK(q > prev);
        prev = q;
    }
    CHECK_THROWS_AS(chi2_quantile(-0.1, 2), domain_error);
}

TEST_CASE("cdf/quantile round trip across the documented grid") {
    for (int dof : {1, 2, 10, 100, 1000}) {
        for (double p = 0.001; p < 0.9995; p += 0.0715) {
            CHECK(t_cdf(t_quantile(p, dof), dof) == Catch::Approx(p).margin(1e-8));
            CHECK(chi2_cdf(chi2_quantile(p, dof), dof) == Catch::Approx(p).margin(1e-8));
        }
        for (double p : {0.001, 0.999}) {
            CHECK(t_cdf(t_quantile(p, dof), dof) == Catch::Approx(p).margin(1e-8));
            CHECK(chi2_cdf(chi2_quantile(p, dof), dof) == Catch::Approx(p).margin(1e-8));
        }
    }
}

TEST_CASE("mean bounds") {
    // zero sigma collapses to the mean
    auto [lo0, hi0] = mean_bounds(0.4, 0.0, 100, 0.1);
    CHECK(lo0 == 0.4);
    CHECK(hi0 == 0.4);

    // varsigma near 1 collapses toward the mean (t median is 0)
    auto [lo1, hi1] = mean_bounds(0.4, 0.1, 100, 0.999999);
    CHECK(hi1 - lo1 < 1e-4);

    // documented instance: half-width = t(0.95, 1000) * 0.1 / sqrt(1001)
    auto [lo2, hi2] = mean_bounds(0.5, 0.1, 1001, 0.1);
    const double half = t_quantile(0.95, 1000) * 0.1 / std::sqrt(1001.0);
    CHECK(hi2 == Catch::Approx(0.5 + half).margin(1e-10));
    CHECK(lo2 == Catch::Approx(0.5 - half).margin(1e-10));

    // smaller varsigma widens the interval
    auto [lo3, hi3] = mean_bounds(0.5, 0.1, 1001, 0.01);
    CHECK(hi3 - lo3 > hi2 - lo2);

    // clamping keeps the lower bound positive on structural support
    auto [lo4, hi4] = mean_bounds(0.001, 0.5, 4, 0.01, true);
    CHECK(lo4 >= 1e-9);
    (void)hi4;
}

TEST_CASE("variance bounds") {
    auto [z0lo, z0hi] = variance_bounds(0.0, 50, 0.01);
    CHECK(z0lo == 0.0);
    CHECK(z0hi == 0.0);

    // interval straddles sigma2 for small xi and large N
    auto [zlo, zhi] = variance_bounds(2.5, 1001, 0.001);
    CHECK(zlo <= 2.5);
    CHECK(zhi >= 2.5);

    // shrinking xi widens the upper bound
    auto [zlo2, zhi2] = variance_bounds(2.5, 1001, 0.0001);
    CHECK(zhi2 > zhi);
    (void)zlo2;

    // paper-literal vs standard lower-bound convention
    auto [plo, phi_] = variance_bounds(1.0, 100, 0.05, VarianceBoundConvention::paper_literal);
    auto [slo, shi_] = variance_bounds(1.0, 100, 0.05, VarianceBoundConvention::standard);
    CHECK(phi_ == Catch::Approx(shi_)); // upper bound identical
    CHECK(plo == Catch::Approx(99.0 / chi2_quantile(0.475, 99)).margin(1e-9));
    CHECK(slo == Catch::Approx(99.0 / chi2_quantile(0.975, 99)).margin(1e-9));
}
