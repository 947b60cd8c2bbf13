#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tcldro/lp.hpp"
#include "tcldro/rng.hpp"

using namespace tcldro;

TEST_CASE("simplex basics") {
    SECTION("min x subject to x >= 3") {
        LpProblem lp(1);
        lp.objective = {1.0};
        lp.add_row({1.0}, LpSense::ge, 3.0);
        const LpResult r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.value == Catch::Approx(3.0).margin(1e-9));
        CHECK(r.x[0] == Catch::Approx(3.0).margin(1e-9));
    }

    SECTION("min -x-y on the unit triangle") {
        LpProblem lp(2);
        lp.objective = {-1.0, -1.0};
        lp.add_row({1.0, 1.0}, LpSense::le, 1.0);
        const LpResult r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.value == Catch::Approx(-1.0).margin(1e-9));
        CHECK(r.x[0] + r.x[1] == Catch::Approx(1.0).margin(1e-9));
    }

    SECTION("infeasible") {
        LpProblem lp(1);
        lp.objective = {1.0};
        lp.add_row({1.0}, LpSense::le, 1.0);
        lp.add_row({1.0}, LpSense::ge, 2.0);
        CHECK(lp_solve(lp).status == LpStatus::infeasible);
    }

    SECTION("unbounded") {
        LpProblem lp(1);
        lp.objective = {-1.0};
        const LpResult r = lp_solve(lp);
        CHECK(r.status == LpStatus::unbounded);
    }

    SECTION("free variable via lower bound") {
        LpProblem lp(1);
        lp.lower[0] = -std::numeric_limits<double>::infinity();
        lp.objective = {1.0};
        lp.add_row({1.0}, LpSense::ge, -5.0);
        const LpResult r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.value == Catch::Approx(-5.0).margin(1e-9));
    }

    SECTION("upper bound") {
        LpProblem lp(1);
        lp.upper[0] = 2.5;
        lp.objective = {-1.0};
        const LpResult r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.value == Catch::Approx(-2.5).margin(1e-9));
    }

    SECTION("equality constraints") {
        LpProblem lp(2);
        lp.objective = {1.0, 2.0};
        lp.add_row({1.0, 1.0}, LpSense::eq, 1.0);
        const LpResult r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.value == Catch::Approx(1.0).margin(1e-9));
        CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("random instances against vertex enumeration") {
    Rng rng(31);
    int solved = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int n = 1 + static_cast<int>(rng.uniform() * 3);  // 1..3
        const int m = 1 + static_cast<int>(rng.uniform() * 6);  // 1..6
        LpProblem lp(n);
        for (int j = 0; j < n; ++j) lp.objective[j] = rng.normal(0.0, 1.0);
        for (int i = 0; i < m; ++i) {
            std::vector<double> row(n);
            for (int j = 0; j < n; ++j) row[j] = rng.normal(0.0, 1.0);
            const double sense = rng.uniform();
            lp.add_row(row, sense < 0.45 ? LpSense::le : sense < 0.9 ? LpSense::ge : LpSense::eq,
                       rng.normal(0.0, 1.0));
        }
        // bounding box keeps every instance bounded
        for (int j = 0; j < n; ++j) {
            std::vector<double> row(n, 0.0);
            row[j] = 1.0;
            lp.add_row(row, LpSense::le, 10.0);
        }
        const LpResult r = lp_solve(lp);
        const auto oracle = oracles::vertex_enumeration_min(lp);
        if (r.status == LpStatus::optimal) {
            REQUIRE(oracle.found);
            CHECK(r.value == Catch::Approx(oracle.value).margin(1e-8));
            // feasibility of the returned point
            for (std::size_t i = 0; i < lp.rows.size(); ++i) {
                double lhs = 0.0;
                for (int j = 0; j < n; ++j) lhs += lp.rows[i][j] * r.x[j];
                if (lp.senses[i] == LpSense::le) CHECK(lhs <= lp.rhs[i] + 1e-9);
                if (lp.senses[i] == LpSense::ge) CHECK(lhs >= lp.rhs[i] - 1e-9);
                if (lp.senses[i] == LpSense::eq) CHECK(lhs == Catch::Approx(lp.rhs[i]).margin(1e-9));
            }
            ++solved;
        } else {
            CHECK_FALSE(oracle.found);
        }
    }
    CHECK(solved > 30); // most random instances should be feasible
}
