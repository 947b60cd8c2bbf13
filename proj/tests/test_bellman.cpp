#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tcldro/bellman.hpp"
#include "tcldro/evaluate.hpp"
#include "tcldro/rng.hpp"

using namespace tcldro;

namespace {

Matrix simple_chain() {
    Matrix p(3, 3, 0.0);
    p(0, 0) = 0.8; p(1, 0) = 0.2;
    p(0, 1) = 0.3; p(1, 1) = 0.4; p(2, 1) = 0.3;
    p(1, 2) = 0.5; p(2, 2) = 0.5;
    return p;
}

SolveConfig cfg_of(double gamma, int T, TerminalRule term = TerminalRule::last_utility) {
    SolveConfig c;
    c.gamma = gamma;
    c.horizon = T;
    c.terminal = term;
    return c;
}

} // namespace

TEST_CASE("z-term constructors") {
    const Matrix pbar = simple_chain();

    SECTION("standard: zero surcharge, base = pbar") {
        const ZTerm zt = z_term_standard(pbar);
        CHECK(max_abs_diff(zt.base, pbar) == 0.0);
        CHECK(max_abs_diff(zt.surcharge, Matrix(3, 3, 0.0)) == 0.0);
    }

    SECTION("stochastic: Z = gamma sigma^2 / (2 mean^2)") {
        MomentMatrices mom{pbar, Matrix(3, 3, 0.0)};
        mom.variance(0, 0) = 0.02;
        Matrix mean2(3, 3, 0.0);
        mean2(0, 0) = 0.5;
        MomentMatrices simple{mean2, Matrix(3, 3, 0.0)};
        simple.variance(0, 0) = 0.02;
        const ZTerm zt = z_term_stochastic(simple, 1.0);
        CHECK(zt.surcharge(0, 0) == Catch::Approx(0.04).margin(1e-15));
        // zero variance reduces to the standard term
        const ZTerm zt0 = z_term_stochastic(MomentMatrices{pbar, Matrix(3, 3, 0.0)}, 0.7);
        CHECK(max_abs_diff(zt0.surcharge, Matrix(3, 3, 0.0)) == 0.0);
        // zero mean with positive variance rejected
        MomentMatrices bad{pbar, Matrix(3, 3, 0.0)};
        bad.variance(2, 0) = 0.1; // (2,0) is a structural zero
        CHECK_THROWS_AS(z_term_stochastic(bad, 1.0), domain_error);
    }

    SECTION("dro bounds degenerate to the stochastic term") {
        MomentMatrices mom{pbar, Matrix(3, 3, 0.0)};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (pbar(a, b) > 0.0) mom.variance(a, b) = 0.01 * pbar(a, b);
        BoundsMatrices bounds{mom.mean, mom.mean, mom.variance, mom.variance};
        const ZTerm dro = z_term_dro(bounds, 0.5);
        const ZTerm sto = z_term_stochastic(mom, 0.5);
        CHECK(max_abs_diff(dro.base, sto.base) == 0.0);
        CHECK(max_abs_diff(dro.surcharge, sto.surcharge) < 1e-15);
    }
}

TEST_CASE("backward recursion closed forms") {
    SECTION("zero utility and stochastic base gives z identically one") {
        const Matrix pbar = simple_chain();
        const Utility u(4, 3, 0.0);
        const ValueFunction vf =
            backward_recursion(z_term_standard(pbar), u, cfg_of(0.3, 4, TerminalRule::ones));
        for (int t = 0; t <= 4; ++t)
            for (int a = 0; a < 3; ++a) CHECK(vf.log_z(t, a) == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("n = 1 collapses to a scalar product") {
        Matrix one(1, 1, 1.0);
        ZTerm zt{one, Matrix(1, 1, 0.25)}; // constant surcharge
        Utility u(3, 1);
        u.at(0, 0) = 1.0; u.at(1, 0) = -2.0; u.at(2, 0) = 0.5;
        const double gamma = 0.8;
        const ValueFunction vf = backward_recursion(zt, u, cfg_of(gamma, 3));
        // log z_0 = (sum_{t=1..T} U_t - T * Z) / gamma with U collected at arrival
        const double expect = (1.0 - 2.0 + 0.5 - 3 * 0.25) / gamma;
        CHECK(vf.log_z(0, 0) == Catch::Approx(expect).margin(1e-12));
        CHECK(vf.phi(0, 0) == Catch::Approx(-gamma * expect).margin(1e-12));
    }

    SECTION("phi and log z stay consistent") {
        const Matrix pbar = simple_chain();
        Utility u(5, 3);
        Rng rng(4);
        for (int t = 0; t < 5; ++t)
            for (int a = 0; a < 3; ++a) u.at(t, a) = rng.normal(0.0, 3.0);
        const ValueFunction vf = backward_recursion(z_term_standard(pbar), u, cfg_of(0.17, 5));
        for (int t = 0; t <= 5; ++t)
            for (int a = 0; a < 3; ++a)
                CHECK(vf.phi(t, a) == Catch::Approx(-0.17 * vf.log_z(t, a)).margin(1e-12));
    }
}

TEST_CASE("policy from z") {
    SECTION("zero utility and surcharge returns the base policy") {
        const Matrix pbar = simple_chain();
        const Utility u(3, 3, 0.0);
        const auto cfg = cfg_of(0.4, 3, TerminalRule::ones);
        const ZTerm zt = z_term_standard(pbar);
        const ValueFunction vf = backward_recursion(zt, u, cfg);
        const Policy pol = policy_from_z(zt, vf, cfg);
        for (const Matrix& m : pol.steps) CHECK(max_abs_diff(m, pbar) < 1e-12);
    }

    SECTION("hand instance: columns (0.7, 0.3), z = (2, 1)") {
        Matrix b(2, 2, 0.0);
        b(0, 0) = 0.7; b(1, 0) = 0.3; b(0, 1) = 0.7; b(1, 1) = 0.3;
        ZTerm zt{b, Matrix(2, 2, 0.0)};
        ValueFunction vf;
        vf.horizon = 1;
        vf.n = 2;
        vf.phi_data.assign(4, 0.0);
        vf.log_z_data = {0.0, 0.0, std::log(2.0), std::log(1.0)};
        const Policy pol = policy_from_z(zt, vf, cfg_of(1.0, 1));
        CHECK(pol.steps[0](0, 0) == Catch::Approx(1.4 / 1.7).margin(1e-14));
        CHECK(pol.steps[0](1, 0) == Catch::Approx(0.3 / 1.7).margin(1e-14));
    }

    SECTION("utility shift invariance") {
        const Matrix pbar = simple_chain();
        Utility u(3, 3);
        Rng rng(9);
        for (int t = 0; t < 3; ++t)
            for (int a = 0; a < 3; ++a) u.at(t, a) = rng.normal(0.0, 2.0);
        Utility shifted = u;
        for (int a = 0; a < 3; ++a) shifted.at(1, a) += 17.0; // constant at one time step
        const auto cfg = cfg_of(0.6, 3);
        const ZTerm zt = z_term_standard(pbar);
        const Policy p1 = policy_from_z(zt, backward_recursion(zt, u, cfg), cfg);
        const Policy p2 = policy_from_z(zt, backward_recursion(zt, shifted, cfg), cfg);
        for (int t = 0; t < 3; ++t) CHECK(max_abs_diff(p1.steps[t], p2.steps[t]) < 1e-12);
    }

    SECTION("policies are column stochastic with support in the base") {
        const Matrix pbar = simple_chain();
        Utility u(4, 3);
        Rng rng(13);
        for (int t = 0; t < 4; ++t)
            for (int a = 0; a < 3; ++a) u.at(t, a) = rng.normal(0.0, 5.0);
        const auto cfg = cfg_of(0.05, 4);
        const ZTerm zt = z_term_standard(pbar);
        const Policy pol = policy_from_z(zt, backward_recursion(zt, u, cfg), cfg);
        for (const Matrix& m : pol.steps) {
            CHECK(is_column_stochastic(m, 1e-9));
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    if (pbar(a, b) == 0.0) CHECK(m(a, b) == 0.0);
        }
    }
}

TEST_CASE("collapse chain") {
    const Matrix pbar = simple_chain();
    Utility u(3, 3);
    Rng rng(21);
    for (int t = 0; t < 3; ++t)
        for (int a = 0; a < 3; ++a) u.at(t, a) = rng.normal(0.0, 1.0);
    const auto cfg = cfg_of(0.35, 3);

    SECTION("sigma^2 = 0: stochastic equals standard within 1e-12") {
        const ZTerm sta = z_term_standard(pbar);
        const ZTerm sto = z_term_stochastic(MomentMatrices{pbar, Matrix(3, 3, 0.0)}, cfg.gamma);
        const Policy p1 = policy_from_z(sta, backward_recursion(sta, u, cfg), cfg);
        const Policy p2 = policy_from_z(sto, backward_recursion(sto, u, cfg), cfg);
        for (int t = 0; t < 3; ++t) CHECK(max_abs_diff(p1.steps[t], p2.steps[t]) < 1e-12);
    }

    SECTION("collapsed bounds: dro equals stochastic within 1e-12") {
        MomentMatrices mom{pbar, Matrix(3, 3, 0.0)};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (pbar(a, b) > 0.0) mom.variance(a, b) = 0.003;
        const BoundsMatrices bounds{mom.mean, mom.mean, mom.variance, mom.variance};
        const ZTerm dro = z_term_dro(bounds, cfg.gamma);
        const ZTerm sto = z_term_stochastic(mom, cfg.gamma);
        const Policy p1 = policy_from_z(dro, backward_recursion(dro, u, cfg), cfg);
        const Policy p2 = policy_from_z(sto, backward_recursion(sto, u, cfg), cfg);
        for (int t = 0; t < 3; ++t) CHECK(max_abs_diff(p1.steps[t], p2.steps[t]) < 1e-12);
    }
}

TEST_CASE("hybrid policy endpoints and mixing") {
    const Matrix pbar = simple_chain();
    Utility u(2, 3, 0.5);
    const auto cfg = cfg_of(0.5, 2);
    const ZTerm zt = z_term_standard(pbar);
    const Policy a = policy_from_z(zt, backward_recursion(zt, u, cfg), cfg);
    MomentMatrices mom{pbar, Matrix(3, 3, 0.0)};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (pbar(i, j) > 0.0) mom.variance(i, j) = 0.01;
    const ZTerm zs = z_term_stochastic(mom, cfg.gamma);
    const Policy b = policy_from_z(zs, backward_recursion(zs, u, cfg), cfg);

    const Policy h0 = hybrid_policy(a, b, 0.0);
    const Policy h1 = hybrid_policy(a, b, 1.0);
    for (int t = 0; t < 2; ++t) {
        CHECK(max_abs_diff(h0.steps[t], a.steps[t]) == 0.0);
        CHECK(max_abs_diff(h1.steps[t], b.steps[t]) == 0.0);
    }
    const Policy h = hybrid_policy(a, b, 0.5);
    for (int t = 0; t < 2; ++t) {
        CHECK(is_column_stochastic(h.steps[t], 1e-12));
        CHECK(h.steps[t](0, 0) == Catch::Approx(0.5 * a.steps[t](0, 0) + 0.5 * b.steps[t](0, 0)));
    }
    CHECK_THROWS_AS(hybrid_policy(a, b, 1.5), domain_error);
}

TEST_CASE("oracle equivalence on random small instances") {
    Rng rng(2026);
    for (int inst = 0; inst < 6; ++inst) {
        const int n = 2 + static_cast<int>(rng.uniform() * 2);   // 2..3
        const int T = 1 + static_cast<int>(rng.uniform() * 3);   // 1..3
        const double gamma = 0.3 + rng.uniform() * 1.2;

        Matrix pbar(n, n, 0.0);
        for (int b = 0; b < n; ++b) {
            double sum = 0.0;
            for (int a = 0; a < n; ++a) {
                pbar(a, b) = 0.05 + rng.uniform();
                sum += pbar(a, b);
            }
            for (int a = 0; a < n; ++a) pbar(a, b) /= sum;
        }
        Utility u(T, n);
        for (int t = 0; t < T; ++t)
            for (int a = 0; a < n; ++a) u.at(t, a) = rng.normal(0.0, 1.0);
        std::vector<double> rho0(n, 1.0 / n);

        const auto cfg = cfg_of(gamma, T);
        const ZTerm zt = z_term_standard(pbar);
        const Policy pol = policy_from_z(zt, backward_recursion(zt, u, cfg), cfg);
        const double opt = expected_cost(pol, CostModel::standard(pbar), u, cfg, rho0);

        // never beaten by random feasible policies
        for (int k = 0; k < 2000; ++k) {
            const Policy rp = oracles::random_policy(pbar, T, rng);
            const double val = expected_cost(rp, CostModel::standard(pbar), u, cfg, rho0);
            CHECK(opt <= val + 1e-9);
        }

        // matches the projected-gradient direct minimizer
        const auto pgd = oracles::projected_gradient_minimize(pbar, Matrix(n, n, 0.0), u, gamma, rho0);
        CHECK(opt == Catch::Approx(pgd.objective).margin(1e-4));

        // expected_cost agrees with the oracle's own objective evaluator
        const double direct = oracles::direct_objective(pol, pbar, Matrix(n, n, 0.0), u, gamma, rho0);
        CHECK(opt == Catch::Approx(direct).margin(1e-10));

        // E_rho0[phi_0] equals the optimal objective
        const ValueFunction vf = backward_recursion(zt, u, cfg);
        double phi0 = 0.0;
        for (int a = 0; a < n; ++a) phi0 += rho0[a] * vf.phi(0, a);
        CHECK(opt == Catch::Approx(phi0).margin(1e-8));
    }
}

TEST_CASE("recursion error paths") {
    Matrix empty_col(2, 2, 0.0);
    empty_col(0, 0) = 1.0; // column 1 empty
    const Utility u(2, 2, 0.0);
    CHECK_THROWS_AS(backward_recursion(ZTerm{empty_col, Matrix(2, 2, 0.0)}, u, cfg_of(1.0, 2)),
                    data_error);
}
