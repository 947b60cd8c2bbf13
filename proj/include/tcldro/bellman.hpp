#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "tcldro/errors.hpp"
#include "tcldro/markov_model.hpp"
#include "tcldro/matrix.hpp"
#include "tcldro/stat_quantiles.hpp"

namespace tcldro {

// State utilities in $ per occupancy. Row t holds the utility collected on
// arrival at time t+1, t = 0..horizon-1; nothing is collected at time 0.
class Utility {
  public:
    Utility() = default;
    Utility(int horizon, int n, double fill = 0.0)
        : horizon_(horizon), n_(n), values_(static_cast<std::size_t>(horizon) * n, fill) {}

    // utility of arriving in state `a` at time `t+1`
    double& at(int t, int a) { return values_[static_cast<std::size_t>(t) * n_ + a]; }
    double at(int t, int a) const { return values_[static_cast<std::size_t>(t) * n_ + a]; }

    int horizon() const { return horizon_; }
    int states() const { return n_; }

    // U_{t+1}^alpha = -price_{t+1} * rated_power[alpha]
    static Utility from_prices(const std::vector<double>& prices, const std::vector<double>& rated_power) {
        Utility u(static_cast<int>(prices.size()), static_cast<int>(rated_power.size()));
        for (int t = 0; t < u.horizon_; ++t)
            for (int a = 0; a < u.n_; ++a) u.at(t, a) = -prices[t] * rated_power[a];
        return u;
    }

  private:
    int horizon_ = 0, n_ = 0;
    std::vector<double> values_;
};

enum class TerminalRule {
    last_utility, // z_T = exp(U_T / gamma): the final utility enters the objective
    ones          // z_T = 1: pure-recursion reading
};

// Exponent convention for the variance surcharges. The theorem form weighs
// policies by exp(-sigma^2 / (2 mean^2)); the appendix form carries an
// extra gamma factor in the exponent and is kept for comparison only.
enum class ExponentConvention { theorem, appendix };

struct SolveConfig {
    double gamma = 0.1; // discomfort penalty, $
    int horizon = 24;   // T
    TerminalRule terminal = TerminalRule::last_utility;
    double eta = 0.0;   // hybrid weight in [0, 1]

    void validate() const {
        if (!(gamma > 0.0)) throw domain_error("SolveConfig: gamma must be > 0");
        if (horizon < 1) throw domain_error("SolveConfig: horizon must be >= 1");
        if (!(eta >= 0.0 && eta <= 1.0)) throw domain_error("SolveConfig: eta must be in [0, 1]");
    }
};

// Per-transition surcharge Z ($) together with the effective base matrix B
// multiplying z in the recursion. Transitions outside the support of B are
// excluded; Z must be finite there.
struct ZTerm {
    Matrix base;
    Matrix surcharge;
};

// Desirability pair: phi in $ and log z = -phi / gamma. z itself can over-
// or underflow a double for realistic utilities, so the log is the stored
// representation.
struct ValueFunction {
    int horizon = 0, n = 0;
    std::vector<double> phi_data;   // (horizon+1) x n
    std::vector<double> log_z_data; // (horizon+1) x n

    double phi(int t, int a) const { return phi_data[static_cast<std::size_t>(t) * n + a]; }
    double log_z(int t, int a) const { return log_z_data[static_cast<std::size_t>(t) * n + a]; }
    double z(int t, int a) const { return std::exp(log_z(t, a)); }
};

// Horizon-indexed controlled transition matrices.
struct Policy {
    std::vector<Matrix> steps;
    int horizon() const { return static_cast<int>(steps.size()); }
    int states() const { return steps.empty() ? 0 : steps[0].rows(); }
};

// Per-(t, beta) additive stage costs in $, used by solvers whose
// worst-case terms do not factor into a per-transition surcharge.
struct StageConstants {
    int horizon = 0, n = 0;
    std::vector<double> values;

    StageConstants() = default;
    StageConstants(int horizon_, int n_, double fill = 0.0)
        : horizon(horizon_), n(n_), values(static_cast<std::size_t>(horizon_) * n_, fill) {}
    double& at(int t, int b) { return values[static_cast<std::size_t>(t) * n + b]; }
    double at(int t, int b) const { return values[static_cast<std::size_t>(t) * n + b]; }
    bool empty() const { return values.empty(); }
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : terms) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : terms) s += std::exp(v - m);
    return m + std::log(s);
}

} // namespace detail

// Z = 0 and B = the default matrix: no uncertainty.
inline ZTerm z_term_standard(const Matrix& pbar) {
    require_column_stochastic(pbar, "z_term_standard");
    return ZTerm{pbar, Matrix(pbar.rows(), pbar.cols(), 0.0)};
}

// Second-order Taylor surcharge Z = gamma * sigma^2 / (2 mean^2) on the
// support; the policy weight becomes exp(-sigma^2 / (2 mean^2)).
inline ZTerm z_term_stochastic(const MomentMatrices& moments, double gamma,
                               ExponentConvention convention = ExponentConvention::theorem) {
    const Matrix& mean = moments.mean;
    const Matrix& var = moments.variance;
    ZTerm zt{mean, Matrix(mean.rows(), mean.cols(), 0.0)};
    const double scale = convention == ExponentConvention::theorem ? gamma : gamma * gamma;
    for (int a = 0; a < mean.rows(); ++a)
        for (int b = 0; b < mean.cols(); ++b) {
            if (mean(a, b) > 0.0) {
                zt.surcharge(a, b) = scale * var(a, b) / (2.0 * mean(a, b) * mean(a, b));
            } else if (var(a, b) > 0.0) {
                std::ostringstream oss;
                oss << "z_term_stochastic: zero mean with nonzero variance at (" << a << "," << b << ")";
                throw domain_error(oss.str());
            }
        }
    return zt;
}

// Entrywise confidence bounds; zero rows/columns mark structural zeros.
struct BoundsMatrices {
    Matrix gamma_lo, gamma_hi, zeta_lo, zeta_hi;
};

// Builds the analytical ambiguity set from sample moments: t bounds on the
// mean, chi-square bounds on the variance, applied entrywise on the
// support of the mean.
inline BoundsMatrices confidence_bounds(
    const MomentMatrices& moments, int n_samples, double varsigma, double xi,
    VarianceBoundConvention convention = VarianceBoundConvention::paper_literal) {
    const int n = moments.mean.rows();
    BoundsMatrices b{Matrix(n, n), Matrix(n, n), Matrix(n, n), Matrix(n, n)};
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
            const double m = moments.mean(a, c);
            if (m <= 0.0) continue;
            const double sigma2 = moments.variance(a, c);
            const auto [glo, ghi] = mean_bounds(m, std::sqrt(sigma2), n_samples, varsigma, true);
            const auto [zlo, zhi] = variance_bounds(sigma2, n_samples, xi, convention);
            b.gamma_lo(a, c) = glo;
            b.gamma_hi(a, c) = ghi;
            b.zeta_lo(a, c) = zlo;
            b.zeta_hi(a, c) = zhi;
        }
    return b;
}

// Worst-case surcharge Z = gamma * zeta_hi / (2 gamma_lo^2) with the mean
// lower bound as the effective base matrix.
inline ZTerm z_term_dro(const BoundsMatrices& bounds, double gamma,
                        ExponentConvention convention = ExponentConvention::theorem) {
    const int n = bounds.gamma_lo.rows();
    ZTerm zt{bounds.gamma_lo, Matrix(n, n, 0.0)};
    const double scale = convention == ExponentConvention::theorem ? gamma : gamma * gamma;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double glo = bounds.gamma_lo(a, b);
            if (glo == 0.0 && bounds.gamma_hi(a, b) == 0.0) continue; // structural zero
            if (!(glo > 0.0)) {
                std::ostringstream oss;
                oss << "z_term_dro: nonpositive mean lower bound at (" << a << "," << b << ")";
                throw domain_error(oss.str());
            }
            zt.surcharge(a, b) = scale * bounds.zeta_hi(a, b) / (2.0 * glo * glo);
        }
    return zt;
}

// Generalized backward recursion, evaluated in log space:
//   z_t^beta = exp((U_t^beta - c_t^beta) / gamma)
//              * sum_alpha B^{alpha beta} z_{t+1}^alpha exp(-Z^{alpha beta} / gamma)
// with U_0 = 0 (utilities are collected on arrival, times 1..T) and c the
// optional stage constants. phi_0 is then the optimal cost-to-go of the
// dispatch objective.
inline ValueFunction backward_recursion(const ZTerm& zterm, const Utility& utility,
                                        const SolveConfig& cfg,
                                        const StageConstants& stage = StageConstants()) {
    cfg.validate();
    const int n = zterm.base.rows();
    const int T = cfg.horizon;
    if (utility.horizon() != T || utility.states() != n)
        throw data_error("backward_recursion: utility shape does not match config");
    if (!stage.empty() && (stage.horizon != T || stage.n != n))
        throw data_error("backward_recursion: stage constants shape mismatch");
    for (int b = 0; b < n; ++b) {
        bool any = false;
        for (int a = 0; a < n; ++a)
            if (zterm.base(a, b) > 0.0) any = true;
        if (!any) {
            std::ostringstream oss;
            oss << "backward_recursion: column " << b << " of the base matrix has empty support";
            throw data_error(oss.str());
        }
    }

    ValueFunction vf;
    vf.horizon = T;
    vf.n = n;
    vf.phi_data.assign(static_cast<std::size_t>(T + 1) * n, 0.0);
    vf.log_z_data.assign(static_cast<std::size_t>(T + 1) * n, 0.0);

    auto lz = [&vf, n](int t, int a) -> double& {
        return vf.log_z_data[static_cast<std::size_t>(t) * n + a];
    };

    for (int a = 0; a < n; ++a)
        lz(T, a) = cfg.terminal == TerminalRule::last_utility ? utility.at(T - 1, a) / cfg.gamma : 0.0;

    std::vector<double> terms;
    terms.reserve(n);
    for (int t = T - 1; t >= 0; --t) {
        for (int b = 0; b < n; ++b) {
            terms.clear();
            for (int a = 0; a < n; ++a) {
                const double base = zterm.base(a, b);
                if (base > 0.0)
                    terms.push_back(std::log(base) - zterm.surcharge(a, b) / cfg.gamma + lz(t + 1, a));
            }
            const double lse = detail::log_sum_exp(terms);
            if (!std::isfinite(lse)) {
                std::ostringstream oss;
                oss << "backward_recursion: desirability underflow at t=" << t << " state=" << b;
                throw numerical_error(oss.str());
            }
            const double u_here = t >= 1 ? utility.at(t - 1, b) : 0.0;
            const double c_here = stage.empty() ? 0.0 : stage.at(t, b);
            lz(t, b) = (u_here - c_here) / cfg.gamma + lse;
        }
    }
    for (int t = 0; t <= T; ++t)
        for (int a = 0; a < n; ++a)
            vf.phi_data[static_cast<std::size_t>(t) * n + a] = -cfg.gamma * lz(t, a);
    return vf;
}

// Optimal policy P_t^{alpha beta} proportional to
// B^{alpha beta} z_{t+1}^alpha exp(-Z^{alpha beta} / gamma), normalized per
// column. Computed in log space and renormalized exactly.
inline Policy policy_from_z(const ZTerm& zterm, const ValueFunction& vf, const SolveConfig& cfg) {
    const int n = zterm.base.rows();
    const int T = vf.horizon;
    Policy policy;
    policy.steps.reserve(T);
    std::vector<double> logw(n);
    for (int t = 0; t < T; ++t) {
        Matrix p(n, n);
        for (int b = 0; b < n; ++b) {
            double m = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < n; ++a) {
                const double base = zterm.base(a, b);
                logw[a] = base > 0.0
                              ? std::log(base) - zterm.surcharge(a, b) / cfg.gamma + vf.log_z(t + 1, a)
                              : -std::numeric_limits<double>::infinity();
                m = std::max(m, logw[a]);
            }
            if (!std::isfinite(m)) {
                std::ostringstream oss;
                oss << "policy_from_z: zero normalizer at t=" << t << " state=" << b;
                throw numerical_error(oss.str());
            }
            double sum = 0.0;
            for (int a = 0; a < n; ++a) {
                const double w = std::isfinite(logw[a]) ? std::exp(logw[a] - m) : 0.0;
                p(a, b) = w;
                sum += w;
            }
            for (int a = 0; a < n; ++a) p(a, b) /= sum;
        }
        policy.steps.push_back(std::move(p));
    }
    return policy;
}

// Theorem-4 combination: entrywise (1 - eta) * worst-case + eta * expected.
inline Policy hybrid_policy(const Policy& p_wc, const Policy& p_e, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw domain_error("hybrid_policy: eta must be in [0, 1]");
    if (p_wc.horizon() != p_e.horizon()) throw data_error("hybrid_policy: horizon mismatch");
    Policy out;
    out.steps.reserve(p_wc.steps.size());
    for (std::size_t t = 0; t < p_wc.steps.size(); ++t) {
        const Matrix& a = p_wc.steps[t];
        const Matrix& b = p_e.steps[t];
        if (!a.same_shape(b)) throw data_error("hybrid_policy: shape mismatch");
        Matrix m(a.rows(), a.cols());
        for (int r = 0; r < a.rows(); ++r)
            for (int c = 0; c < a.cols(); ++c) m(r, c) = (1.0 - eta) * a(r, c) + eta * b(r, c);
        out.steps.push_back(std::move(m));
    }
    return out;
}

} // namespace tcldro
