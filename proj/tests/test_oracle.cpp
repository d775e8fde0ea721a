#include <doctest.h>

#include "helpers.hpp"

using namespace psm;
using testutil::rel_err;

TEST_CASE("finite differences reproduce the unconstrained statics") {
    const Scenario sc = testutil::reference_scenario();
    for (const Wrt wrt : {Wrt::t1, Wrt::t2}) {
        const OracleReport rep = fd_statics(sc, wrt);
        REQUIRE(rep.comparable());
        CHECK(rep.max_rel_err <= 1e-3);
    }
}

TEST_CASE("finite differences reproduce the binding statics, with yT pinned at zero") {
    const Scenario sc = testutil::capped_reference(0.5);
    for (const Wrt wrt : {Wrt::t1, Wrt::t2}) {
        const OracleReport rep = fd_statics(sc, wrt);
        REQUIRE(rep.comparable());
        CHECK(rep.fd_yT == 0.0); // ybar depends on s1 only, both sides stay pinned
        CHECK(rep.an_yT == 0.0);
        CHECK(rep.max_rel_err <= 1e-3);
        CHECK(rep.lambda_locally_constant);
    }
}

TEST_CASE("slack capped scenarios are measured against the plain system") {
    const Scenario sc = testutil::capped_reference(1.8);
    const Equilibrium eq = solve(sc);
    REQUIRE_FALSE(eq.binding);
    for (const Wrt wrt : {Wrt::t1, Wrt::t2}) {
        const OracleReport rep = fd_statics(sc, wrt);
        REQUIRE(rep.comparable());
        CHECK(rep.max_rel_err <= 1e-3);
        // the capped-law yT is a different object than the
        // local derivative whenever the cap is slack
        const StaticsReport capped_law = statics_constrained(eq, sc, wrt);
        CHECK(capped_law.yT == doctest::Approx((sc.ybar() - eq.vars.y) / sc.taxes.t1));
    }
}

TEST_CASE("branch crossing is detected and comparison suppressed") {
    // cap sits barely above the slack optimum: a small tax step rebinds it
    Scenario sc = testutil::reference_scenario();
    const Equilibrium base = solve(sc);
    const double ebit = sc.primitives.aff1.revenue.eval(sc.s1).value -
                        sc.primitives.aff1.cost.eval(sc.s1).value;
    sc.thin_cap = ThinCapRule((base.vars.y + 1e-6) / ebit, 0.0);
    bool crossed = false;
    for (const Wrt wrt : {Wrt::t1, Wrt::t2}) {
        const OracleReport rep = fd_statics(sc, wrt, 1e-3);
        crossed = crossed || rep.branch_crossing;
        if (rep.branch_crossing) CHECK(rep.max_rel_err == 0.0);
    }
    CHECK(crossed);
}

TEST_CASE("step halving shrinks the truncation error quadratically") {
    const Scenario sc = testutil::reference_scenario();
    const OracleReport coarse = fd_statics(sc, Wrt::t1, 1e-2);
    const OracleReport fine = fd_statics(sc, Wrt::t1, 1e-3);
    REQUIRE(coarse.comparable());
    REQUIRE(fine.comparable());
    const double ec = std::fabs(coarse.fd_x1T - coarse.an_x1T);
    const double ef = std::fabs(fine.fd_x1T - fine.an_x1T);
    REQUIRE(ef > 0.0);
    const double ratio = ec / ef;
    CHECK(ratio > 10.0);
    CHECK(ratio < 1000.0);
}

TEST_CASE("grid oracle on a singleton box returns that point") {
    const Scenario sc = testutil::reference_scenario();
    const Equilibrium eq = solve(sc);
    const GridResult g = grid_oracle(sc, eq.vars, eq.vars, 1);
    CHECK(g.best_vars.x1 == eq.vars.x1);
    CHECK(g.best_objective == doctest::Approx(eq.objective).epsilon(1e-12));
    CHECK(g.evaluated == 1);
}

TEST_CASE("grid oracle never beats a certified equilibrium") {
    for (const bool capped : {false, true}) {
        const Scenario sc = capped ? testutil::capped_reference(0.6)
                                   : testutil::reference_scenario();
        const Equilibrium eq = solve(sc);
        const auto [lo, hi] = default_box(eq.vars);
        const GridResult g = grid_oracle_refined(sc, lo, hi, 21);
        CHECK(g.best_objective <= eq.objective + 1e-6);
    }
}

TEST_CASE("paper transactions at equal prices never beat doing nothing") {
    AffiliatePrimitives a{QuadraticRevenue(9.0, 1.0), QuadraticCost(0.0, 2.0, 1.0),
                          BankInterestSchedule(0.0, 0.04, 0.0)};
    ConcealmentQuadratic f({0.8, 0.7, 0.4}, Mat3{});
    ConcealmentQuadratic g({0.5, 0.3, 0.2}, Mat3{});
    Scenario sc{TaxRegime(0.3, 0.1), 3.0, 3.0, 0.05, 0.0, 0.0, FirmPrimitives{a, a, f, g},
                std::nullopt};
    // q1 = q2 = q and y = 0: L = T (p2 - p1) q - f - g = -(f + g) at p1 = p2
    const double baseline = lagrangian(sc, DecisionVars{0.0, 0.0, 0.0}, 0);
    double best = -1e300;
    for (int k = 0; k <= 40; ++k) {
        const double q = 0.05 * k;
        best = std::max(best, lagrangian(sc, DecisionVars{3.0 * q, 3.0 * q, 0.0}, 0));
    }
    CHECK(best <= baseline + 1e-12);
}

TEST_CASE("oracle step keeps the tax rates admissible") {
    Scenario sc = testutil::reference_scenario();
    sc.taxes = TaxRegime(0.999, 0.15);
    CHECK_THROWS_AS(fd_statics(sc, Wrt::t1, 1e-2), Error);
}
