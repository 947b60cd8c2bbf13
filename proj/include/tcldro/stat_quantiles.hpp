#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "tcldro/errors.hpp"

namespace tcldro {

namespace detail {

constexpr int kSpecialFnMaxIter = 20000;

// Regularized lower incomplete gamma P(a, x) by series expansion; valid for
// x < a + 1 where the series converges quickly.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kSpecialFnMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw numerical_error("incomplete gamma series did not converge");
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
// fraction; valid for x >= a + 1.
inline double gamma_q_contfrac(double a, double x) {
    const double fpmin = std::numeric_limits<double>::min() / 1e-16;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kSpecialFnMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw numerical_error("incomplete gamma continued fraction did not converge");
}

// Continued fraction for the regularized incomplete beta (Lentz).
inline double beta_contfrac(double a, double b, double x) {
    const double fpmin = std::numeric_limits<double>::min() / 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kSpecialFnMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) return h;
    }
    throw numerical_error("incomplete beta continued fraction did not converge");
}

} // namespace detail

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double gamma_p(double a, double x) {
    if (a <= 0.0) throw domain_error("gamma_p: a must be positive");
    if (x < 0.0) throw domain_error("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

inline double gamma_q(double a, double x) {
    if (a <= 0.0) throw domain_error("gamma_q: a must be positive");
    if (x < 0.0) throw domain_error("gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

// Regularized incomplete beta I_x(a, b).
inline double beta_inc(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw domain_error("beta_inc: a, b must be positive");
    if (x < 0.0 || x > 1.0) throw domain_error("beta_inc: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double lnfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(lnfront);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_contfrac(a, b, x) / a;
    return 1.0 - front * detail::beta_contfrac(b, a, 1.0 - x) / b;
}

// Student t CDF with dof degrees of freedom.
inline double t_cdf(double x, int dof) {
    if (dof < 1) throw domain_error("t_cdf: dof must be >= 1");
    const double k = static_cast<double>(dof);
    const double ib = beta_inc(0.5 * k, 0.5, k / (k + x * x));
    return x >= 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

inline double t_pdf(double x, int dof) {
    const double k = static_cast<double>(dof);
    const double lognorm =
        std::lgamma(0.5 * (k + 1.0)) - std::lgamma(0.5 * k) - 0.5 * std::log(k * 3.14159265358979323846);
    return std::exp(lognorm - 0.5 * (k + 1.0) * std::log1p(x * x / k));
}

// Chi-square CDF with dof degrees of freedom.
inline double chi2_cdf(double x, int dof) {
    if (dof < 1) throw domain_error("chi2_cdf: dof must be >= 1");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * dof, 0.5 * x);
}

inline double chi2_pdf(double x, int dof) {
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * dof;
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

namespace detail {

// Bisection-guarded Newton inversion of a monotone CDF. The bracket
// [lo, hi] must contain the root; Newton steps falling outside collapse
// to bisection.
template <typename Cdf, typename Pdf>
double invert_cdf(double p, double lo, double hi, Cdf cdf, Pdf pdf) {
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = cdf(x) - p;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        if (std::fabs(f) < 1e-14) return x;
        const double d = pdf(x);
        double step = d > 0.0 ? x - f / d : std::numeric_limits<double>::quiet_NaN();
        if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
        if (std::fabs(step - x) < 1e-13 * (1.0 + std::fabs(x)) && std::fabs(f) < 1e-11) return step;
        x = step;
    }
    return x;
}

} // namespace detail

// p-quantile of the Student t distribution, |CDF(x) - p| <= 1e-9.
inline double t_quantile(double p, int dof) {
    if (!(p > 0.0 && p < 1.0)) throw domain_error("t_quantile: p must be in (0, 1)");
    if (dof < 1) throw domain_error("t_quantile: dof must be >= 1");
    if (p == 0.5) return 0.0;
    // expand a symmetric bracket until it straddles p
    double hi = 2.0;
    while (t_cdf(hi, dof) < p && hi < 1e300) hi *= 2.0;
    double lo = -2.0;
    while (t_cdf(lo, dof) > p && lo > -1e300) lo *= 2.0;
    return detail::invert_cdf(
        p, lo, hi, [dof](double x) { return t_cdf(x, dof); },
        [dof](double x) { return t_pdf(x, dof); });
}

// p-quantile of the chi-square distribution, |CDF(x) - p| <= 1e-9.
inline double chi2_quantile(double p, int dof) {
    if (!(p > 0.0 && p < 1.0)) throw domain_error("chi2_quantile: p must be in (0, 1)");
    if (dof < 1) throw domain_error("chi2_quantile: dof must be >= 1");
    double hi = static_cast<double>(dof);
    while (chi2_cdf(hi, dof) < p && hi < 1e300) hi *= 2.0;
    return detail::invert_cdf(
        p, 0.0, hi, [dof](double x) { return chi2_cdf(x, dof); },
        [dof](double x) { return chi2_pdf(x, dof); });
}

// Confidence bounds describing the analytical ambiguity set: an interval
// around the empirical mean and one around the empirical variance.
struct ConfidenceBounds {
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;
    double zeta_lo = 0.0;
    double zeta_hi = 0.0;
};

// Floor applied to the mean lower bound on structurally nonzero entries;
// the worst-case policy divides by gamma_lo^2 and takes its log.
constexpr double kMeanBoundFloor = 1e-9;

// Two-sided t interval for the sample mean: mean -+ t_{1-varsigma/2, N-1} * sigma / sqrt(N).
inline std::pair<double, double> mean_bounds(double mean, double sigma, int n_samples,
                                             double varsigma, bool structurally_nonzero = true) {
    if (n_samples < 2) throw domain_error("mean_bounds: need N >= 2");
    if (sigma < 0.0) throw domain_error("mean_bounds: sigma must be >= 0");
    if (!(varsigma > 0.0 && varsigma < 1.0)) throw domain_error("mean_bounds: varsigma must be in (0, 1)");
    const double half =
        sigma == 0.0 ? 0.0 : t_quantile(1.0 - 0.5 * varsigma, n_samples - 1) * sigma / std::sqrt(n_samples);
    double lo = mean - half;
    const double hi = mean + half;
    if (structurally_nonzero) lo = std::max(lo, kMeanBoundFloor);
    return {lo, hi};
}

enum class VarianceBoundConvention {
    paper_literal, // lower bound divides by the (1-xi)/2 quantile
    standard       // lower bound divides by the 1-xi/2 quantile
};

// Chi-square interval for the sample variance with dof = N-1.
inline std::pair<double, double> variance_bounds(
    double sigma2, int n_samples, double xi,
    VarianceBoundConvention convention = VarianceBoundConvention::paper_literal) {
    if (n_samples < 2) throw domain_error("variance_bounds: need N >= 2");
    if (sigma2 < 0.0) throw domain_error("variance_bounds: sigma2 must be >= 0");
    if (!(xi > 0.0 && xi < 1.0)) throw domain_error("variance_bounds: xi must be in (0, 1)");
    if (sigma2 == 0.0) return {0.0, 0.0};
    const int dof = n_samples - 1;
    const double p_lo =
        convention == VarianceBoundConvention::paper_literal ? 0.5 * (1.0 - xi) : 1.0 - 0.5 * xi;
    const double lo = dof * sigma2 / chi2_quantile(p_lo, dof);
    const double hi = dof * sigma2 / chi2_quantile(0.5 * xi, dof);
    return {lo, hi};
}

} // namespace tcldro
