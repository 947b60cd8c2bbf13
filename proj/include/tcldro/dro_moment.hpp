#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "tcldro/bellman.hpp"
#include "tcldro/errors.hpp"
#include "tcldro/evaluate.hpp"
#include "tcldro/lp.hpp"
#include "tcldro/markov_model.hpp"

namespace tcldro {

// Moment ambiguity for one transition probability: all distributions on
// the grid whose mean lies within b of the nominal mean and whose second
// central moment is at most c * sigma2.
struct MomentAmbiguity {
    double mean = 0.0;
    double sigma2 = 0.0;
    double mean_slack = 0.0;        // b
    double variance_inflation = 1.0; // c
    std::vector<double> grid;        // ascending support points in (0, 1]

    void validate() const {
        if (grid.empty()) throw domain_error("MomentAmbiguity: empty grid");
        for (double w : grid)
            if (!(w > 0.0)) throw domain_error("MomentAmbiguity: grid points must be positive");
        if (mean_slack < 0.0) throw domain_error("MomentAmbiguity: b must be >= 0");
        if (variance_inflation * sigma2 < 0.0)
            throw domain_error("MomentAmbiguity: c * sigma2 must be >= 0");
    }
};

// Default discretized support: uniform points covering the moment-feasible
// region [m - b - 3 sigma sqrt(c), m + b + 3 sigma sqrt(c)] clipped to
// (0, 1].
inline std::vector<double> default_moment_grid(double mean, double sigma2, double b, double c,
                                               int points = 201) {
    if (points < 1) throw domain_error("default_moment_grid: need at least one point");
    const double spread = b + 3.0 * std::sqrt(sigma2 * std::max(c, 0.0));
    const double lo = std::max(1e-6, mean - spread);
    const double hi = std::max(lo, std::min(1.0, mean + spread));
    std::vector<double> grid;
    if (hi <= lo || points == 1) {
        grid.push_back(lo);
        return grid;
    }
    grid.reserve(points);
    for (int i = 0; i < points; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
    return grid;
}

inline MomentAmbiguity make_moment_ambiguity(double mean, double sigma2, double b, double c,
                                             int grid_points = 201) {
    MomentAmbiguity amb;
    amb.mean = mean;
    amb.sigma2 = sigma2;
    amb.mean_slack = b;
    amb.variance_inflation = c;
    amb.grid = default_moment_grid(mean, sigma2, b, c, grid_points);
    return amb;
}

// sup of E[-log w] over the ambiguity set, solved as a primal LP over the
// grid weights.
inline std::pair<double, std::vector<double>> worst_case_neglog_primal(const MomentAmbiguity& amb) {
    amb.validate();
    const int g = static_cast<int>(amb.grid.size());
    LpProblem lp(g);
    // maximize sum q_w (-log w)  ==  minimize sum q_w log w
    for (int i = 0; i < g; ++i) lp.objective[i] = std::log(amb.grid[i]);
    std::vector<double> ones(g, 1.0);
    lp.add_row(ones, LpSense::eq, 1.0);
    std::vector<double> w(amb.grid);
    lp.add_row(w, LpSense::ge, amb.mean - amb.mean_slack);
    lp.add_row(w, LpSense::le, amb.mean + amb.mean_slack);
    std::vector<double> sq(g);
    for (int i = 0; i < g; ++i) sq[i] = (amb.grid[i] - amb.mean) * (amb.grid[i] - amb.mean);
    lp.add_row(sq, LpSense::le, amb.variance_inflation * amb.sigma2);

    const LpResult res = lp_solve(lp);
    if (res.status == LpStatus::infeasible)
        throw data_error("worst_case_neglog_primal: moment set infeasible on the grid; widen the grid");
    if (res.status != LpStatus::optimal)
        throw numerical_error("worst_case_neglog_primal: unexpected LP status");
    return {-res.value, res.x};
}

struct DualSolution {
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double big_lambda = 0.0;
    double nu = 0.0;
    double value = 0.0;
};

// Dual of the inner maximization: minimize
//   (b - m) lambda_lo + (b + m) lambda_hi + c sigma2 Lambda + nu
// subject to (lambda_hi - lambda_lo) w + Lambda (w - m)^2 + nu >= -log w
// at every grid point.
inline DualSolution worst_case_neglog_dual(const MomentAmbiguity& amb) {
    amb.validate();
    LpProblem lp(4); // [lambda_lo, lambda_hi, Lambda, nu]
    lp.lower[3] = -std::numeric_limits<double>::infinity(); // nu free
    lp.objective[0] = amb.mean_slack - amb.mean;
    lp.objective[1] = amb.mean_slack + amb.mean;
    lp.objective[2] = amb.variance_inflation * amb.sigma2;
    lp.objective[3] = 1.0;
    for (double w : amb.grid) {
        const double d = w - amb.mean;
        lp.add_row({-w, w, d * d, 1.0}, LpSense::ge, -std::log(w));
    }
    const LpResult res = lp_solve(lp);
    if (res.status == LpStatus::infeasible)
        throw data_error("worst_case_neglog_dual: infeasible dual; widen the grid");
    if (res.status != LpStatus::optimal)
        throw numerical_error("worst_case_neglog_dual: unexpected LP status");
    DualSolution sol;
    sol.lambda_lo = res.x[0];
    sol.lambda_hi = res.x[1];
    sol.big_lambda = res.x[2];
    sol.nu = res.x[3];
    sol.value = res.value;
    return sol;
}

// Largest violation of the dual constraint over the grid (negative slack).
inline double dual_feasibility_residual(const MomentAmbiguity& amb, const DualSolution& sol) {
    double worst = 0.0;
    for (double w : amb.grid) {
        const double lhs = (sol.lambda_hi - sol.lambda_lo) * w +
                           sol.big_lambda * (w - amb.mean) * (w - amb.mean) + sol.nu;
        worst = std::max(worst, -std::log(w) - lhs);
    }
    return worst;
}

// Folds the per-entry worst-case values into the Bellman recursion:
//   gamma (log P + WC) = gamma log(P / Pbar) + gamma (WC + log Pbar),
// so Z = gamma (WC + log Pbar) with the nominal mean as base.
inline ZTerm moment_effective_zterm(const Matrix& worst_case, const Matrix& mean, double gamma) {
    ZTerm zt{mean, Matrix(mean.rows(), mean.cols(), 0.0)};
    for (int a = 0; a < mean.rows(); ++a)
        for (int b = 0; b < mean.cols(); ++b)
            if (mean(a, b) > 0.0) {
                const double wc = worst_case(a, b);
                if (!std::isfinite(wc)) throw domain_error("moment_effective_zterm: non-finite worst case");
                zt.surcharge(a, b) = gamma * (wc + std::log(mean(a, b)));
            }
    return zt;
}

struct MomentEntryReport {
    int alpha = 0, beta = 0;
    double mean = 0.0, sigma2 = 0.0, b = 0.0, c = 0.0;
    double primal = 0.0, dual = 0.0, gap = 0.0;
};

struct MomentSolveResult {
    Policy policy;
    double objective = 0.0;
    ZTerm zterm;
    ValueFunction value_function;
    std::vector<MomentEntryReport> report;
};

// Full moment-based solve: one small LP pair per supported transition, the
// worst-case constants folded into the generalized recursion, and the
// objective priced under the same constants.
inline MomentSolveResult solve_moment_mdp(const MomentMatrices& moments, double b, double c,
                                          const Utility& utility, const SolveConfig& cfg,
                                          const std::vector<double>& rho0, int grid_points = 201) {
    const int n = moments.mean.rows();
    Matrix wc(n, n, 0.0);
    MomentSolveResult out;
    for (int beta = 0; beta < n; ++beta)
        for (int alpha = 0; alpha < n; ++alpha) {
            const double m = moments.mean(alpha, beta);
            if (m <= 0.0) continue; // no ambiguity on impossible transitions
            const MomentAmbiguity amb =
                make_moment_ambiguity(m, moments.variance(alpha, beta), b, c, grid_points);
            const auto [primal, q] = worst_case_neglog_primal(amb);
            const DualSolution dual = worst_case_neglog_dual(amb);
            wc(alpha, beta) = primal;
            out.report.push_back(MomentEntryReport{alpha, beta, m, moments.variance(alpha, beta), b,
                                                   c, primal, dual.value,
                                                   std::fabs(primal - dual.value)});
        }
    out.zterm = moment_effective_zterm(wc, moments.mean, cfg.gamma);
    out.value_function = backward_recursion(out.zterm, utility, cfg);
    out.policy = policy_from_z(out.zterm, out.value_function, cfg);
    out.objective = expected_cost(out.policy, CostModel::from_zterm(out.zterm), utility, cfg, rho0);
    return out;
}

inline MomentSolveResult solve_moment_mdp(const SampleSet& samples, double b, double c,
                                          const Utility& utility, const SolveConfig& cfg,
                                          const std::vector<double>& rho0, int grid_points = 201) {
    return solve_moment_mdp(sample_moments(samples), b, c, utility, cfg, rho0, grid_points);
}

} // namespace tcldro
