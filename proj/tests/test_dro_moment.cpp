#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tcldro/dro_moment.hpp"
#include "tcldro/rng.hpp"

using namespace tcldro;

namespace {

std::vector<double> linear_grid(double lo, double hi, int points) {
    std::vector<double> g;
    for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1.0));
    return g;
}

MomentAmbiguity amb_with_grid(double m, double s2, double b, double c, std::vector<double> grid) {
    MomentAmbiguity a;
    a.mean = m;
    a.sigma2 = s2;
    a.mean_slack = b;
    a.variance_inflation = c;
    a.grid = std::move(grid);
    return a;
}

} // namespace

TEST_CASE("worst-case neglog: degenerate and saturated sets") {
    SECTION("b = 0, c sigma2 = 0, m on the grid: point mass at m") {
        const auto amb = amb_with_grid(0.4, 0.0, 0.0, 1.0, {0.2, 0.4, 0.6});
        const auto [value, q] = worst_case_neglog_primal(amb);
        CHECK(value == Catch::Approx(-std::log(0.4)).margin(1e-9));
        CHECK(q[1] == Catch::Approx(1.0).margin(1e-9));
    }

    SECTION("slack covering the whole grid: mass moves to the smallest point") {
        const auto amb = amb_with_grid(0.5, 1.0, 1.0, 10.0, linear_grid(0.05, 0.95, 51));
        const auto [value, q] = worst_case_neglog_primal(amb);
        CHECK(value == Catch::Approx(-std::log(0.05)).margin(1e-9));
        (void)q;
    }

    SECTION("infeasible moments raise a data error") {
        // grid far from the required mean window
        const auto amb = amb_with_grid(0.9, 0.0, 0.0, 1.0, {0.1, 0.2});
        CHECK_THROWS_AS(worst_case_neglog_primal(amb), data_error);
    }
}

TEST_CASE("strong duality") {
    SECTION("documented instance") {
        const auto amb = amb_with_grid(0.5, 0.01, 0.1, 2.0, linear_grid(0.05, 0.95, 201));
        const auto [primal, q] = worst_case_neglog_primal(amb);
        const DualSolution dual = worst_case_neglog_dual(amb);
        CHECK(std::fabs(primal - dual.value) <= 1e-6);
        CHECK(dual_feasibility_residual(amb, dual) <= 1e-8);
        (void)q;
    }

    SECTION("randomized instances") {
        Rng rng(404);
        for (int k = 0; k < 100; ++k) {
            const double m = 0.05 + 0.9 * rng.uniform();
            const double sigma = 0.02 + 0.2 * rng.uniform();
            const double b = 0.3 * rng.uniform();
            const double c = 1.0 + 2.0 * rng.uniform();
            const auto amb = amb_with_grid(m, sigma * sigma, b, c,
                                           linear_grid(0.01, 1.0, 101 + (k % 3) * 50));
            const auto [primal, q] = worst_case_neglog_primal(amb);
            const DualSolution dual = worst_case_neglog_dual(amb);
            CHECK(std::fabs(primal - dual.value) <= 1e-6);
            CHECK(dual.value >= primal - 1e-6);
            CHECK(dual_feasibility_residual(amb, dual) <= 1e-8);
            (void)q;
        }
    }
}

TEST_CASE("worst-case monotonicity in b and c on a fixed grid") {
    const auto grid = linear_grid(0.02, 0.98, 161);
    const double m = 0.45, s2 = 0.02 * 0.02;
    double prev = -1e300;
    for (double b : {0.0, 0.05, 0.1, 0.2}) {
        const auto [v, q] = worst_case_neglog_primal(amb_with_grid(m, s2, b, 2.0, grid));
        CHECK(v >= prev - 1e-10);
        prev = v;
        (void)q;
    }
    prev = -1e300;
    for (double c : {1.0, 1.5, 2.0, 3.0}) {
        const auto [v, q] = worst_case_neglog_primal(amb_with_grid(m, s2, 0.1, c, grid));
        CHECK(v >= prev - 1e-10);
        prev = v;
        (void)q;
    }
    // enlarging the grid hull never decreases the value
    const auto [narrow, q1] = worst_case_neglog_primal(amb_with_grid(m, s2, 0.1, 2.0, linear_grid(0.2, 0.8, 121)));
    const auto [wide, q2] = worst_case_neglog_primal(
        amb_with_grid(m, s2, 0.1, 2.0, [] {
            auto g = linear_grid(0.2, 0.8, 121);
            const auto extra = linear_grid(0.05, 0.95, 121);
            g.insert(g.end(), extra.begin(), extra.end());
            std::sort(g.begin(), g.end());
            return g;
        }()));
    CHECK(wide >= narrow - 1e-10);
    (void)q1;
    (void)q2;
}

TEST_CASE("effective z-term folding") {
    Matrix mean(2, 2, 0.0);
    mean(0, 0) = 0.7; mean(1, 0) = 0.3; mean(0, 1) = 0.4; mean(1, 1) = 0.6;

    SECTION("zero-ambiguity worst case folds to zero surcharge") {
        Matrix wc(2, 2, 0.0);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) wc(a, b) = -std::log(mean(a, b));
        const ZTerm zt = moment_effective_zterm(wc, mean, 0.7);
        CHECK(max_abs_diff(zt.surcharge, Matrix(2, 2, 0.0)) < 1e-14);
    }

    SECTION("larger worst case lowers the policy weight") {
        Matrix wc(2, 2, 0.0);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) wc(a, b) = -std::log(mean(a, b));
        wc(0, 0) += 0.5;
        const ZTerm zt = moment_effective_zterm(wc, mean, 0.7);
        CHECK(zt.surcharge(0, 0) > 0.0);
        CHECK(std::exp(-zt.surcharge(0, 0) / 0.7) < 1.0);
    }
}

TEST_CASE("solve_moment_mdp") {
    Matrix pbar(2, 2, 0.0);
    pbar(0, 0) = 0.7; pbar(1, 0) = 0.3; pbar(0, 1) = 0.4; pbar(1, 1) = 0.6;
    SolveConfig cfg;
    cfg.gamma = 0.6;
    cfg.horizon = 2;
    Utility u(2, 2);
    u.at(0, 0) = 1.2; u.at(0, 1) = -0.3; u.at(1, 0) = 0.4; u.at(1, 1) = 0.9;
    const std::vector<double> rho0{0.5, 0.5};

    SECTION("degenerate moment set collapses to the standard policy") {
        SampleSet identical;
        identical.matrices.assign(5, pbar);
        const MomentSolveResult res =
            solve_moment_mdp(identical, 0.0, 1.0, u, cfg, rho0, 41);
        const ZTerm sta = z_term_standard(pbar);
        const Policy std_pol = policy_from_z(sta, backward_recursion(sta, u, cfg), cfg);
        for (int t = 0; t < 2; ++t)
            CHECK(max_abs_diff(res.policy.steps[t], std_pol.steps[t]) < 1e-9);
        const double std_cost = expected_cost(std_pol, CostModel::standard(pbar), u, cfg, rho0);
        CHECK(res.objective == Catch::Approx(std_cost).margin(1e-9));
    }

    SECTION("objective non-decreasing in b and c") {
        SampleSet samples = perturb_samples(pbar, 0.15, 200, 7);
        double prev = -1e300;
        for (double b : {0.05, 0.1, 0.2}) {
            const auto res = solve_moment_mdp(samples, b, 2.0, u, cfg, rho0, 101);
            CHECK(res.objective >= prev - 1e-9);
            prev = res.objective;
        }
        prev = -1e300;
        for (double c : {1.5, 2.0, 3.0}) {
            const auto res = solve_moment_mdp(samples, 0.1, c, u, cfg, rho0, 101);
            CHECK(res.objective >= prev - 1e-9);
            prev = res.objective;
        }
    }

    SECTION("separability: worst-case constants do not depend on the utility") {
        SampleSet samples = perturb_samples(pbar, 0.15, 100, 3);
        const auto res1 = solve_moment_mdp(samples, 0.1, 2.0, u, cfg, rho0, 81);
        Utility u2(2, 2);
        u2.at(0, 0) = -5.0; u2.at(0, 1) = 2.0; u2.at(1, 0) = 0.0; u2.at(1, 1) = 7.0;
        const auto res2 = solve_moment_mdp(samples, 0.1, 2.0, u2, cfg, rho0, 81);
        REQUIRE(res1.report.size() == res2.report.size());
        for (std::size_t i = 0; i < res1.report.size(); ++i) {
            CHECK(res1.report[i].primal == res2.report[i].primal); // bit identical
            CHECK(res1.report[i].dual == res2.report[i].dual);
        }
    }

    SECTION("grid-search oracle on the single-level objective (n=2, T=2)") {
        SampleSet samples = perturb_samples(pbar, 0.15, 150, 11);
        const MomentMatrices mom = sample_moments(samples);
        const auto res = solve_moment_mdp(mom, 0.1, 2.0, u, cfg, rho0, 121);

        // independent DP over a dense grid of column policies evaluating
        // the single-level stage gamma * sum_a P (log P + WC); arrival
        // utilities are collected inside each stage, so the continuation at
        // the horizon end is zero
        Matrix wc(2, 2, 0.0);
        for (const auto& row : res.report) wc(row.alpha, row.beta) = row.primal;
        const int G = 2001;
        std::vector<std::vector<double>> arrival_u = {{u.at(0, 0), u.at(0, 1)},
                                                      {u.at(1, 0), u.at(1, 1)}};
        std::vector<std::vector<double>> v2(3, std::vector<double>(2, 0.0));
        for (int t = 1; t >= 0; --t)
            for (int b = 0; b < 2; ++b) {
                double best = 1e300;
                for (int g = 1; g < G; ++g) {
                    const double p0 = static_cast<double>(g) / G;
                    const double p1 = 1.0 - p0;
                    const double stage =
                        p0 * (-arrival_u[t][0] + cfg.gamma * (std::log(p0) + wc(0, b)) + v2[t + 1][0]) +
                        p1 * (-arrival_u[t][1] + cfg.gamma * (std::log(p1) + wc(1, b)) + v2[t + 1][1]);
                    best = std::min(best, stage);
                }
                v2[t][b] = best;
            }
        const double oracle = 0.5 * (v2[0][0] + v2[0][1]);
        CHECK(res.objective == Catch::Approx(oracle).margin(1e-3));
    }
}
