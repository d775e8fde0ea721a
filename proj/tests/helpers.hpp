#pragma once

#include <cmath>
#include <functional>

#include "psm/psm.hpp"

namespace testutil {

using namespace psm;

inline double rel_err(double got, double want, double floor = 1e-8) {
    return std::fabs(got - want) / std::max(std::fabs(want), floor);
}

// Fixed reference scenario: p1 < p2, cost-of-funds satisfied, interior
// optimum, moderate cross-effects. Unconstrained unless a cap is attached.
inline Scenario reference_scenario() {
    AffiliatePrimitives a1{QuadraticRevenue(9.0, 1.2), QuadraticCost(0.5, 1.0, 0.4),
                           BankInterestSchedule(8.0, 0.06, 0.001)};
    AffiliatePrimitives a2{QuadraticRevenue(10.0, 1.0), QuadraticCost(0.5, 1.5, 0.5),
                           BankInterestSchedule(10.0, 0.03, 0.0008)};
    ConcealmentQuadratic f({0.9, 0.52, 0.35},
                           {{{0.25, 0.05, 0.10}, {0.05, 0.30, 0.03}, {0.10, 0.03, 0.35}}});
    ConcealmentQuadratic g({0.45, 0.40, 0.20},
                           {{{0.20, 0.04, 0.08}, {0.04, 0.25, 0.02}, {0.08, 0.02, 0.30}}});
    return Scenario{TaxRegime(0.30, 0.15), 3.0, 4.0, 0.05, 5.5, 2.2,
                    FirmPrimitives{a1, a2, f, g}, std::nullopt};
}

// Same scenario with the cap set to `frac` times the uncapped optimum's y.
inline Scenario capped_reference(double frac) {
    Scenario sc = reference_scenario();
    const Equilibrium eq = solve(sc);
    const double ebit = sc.primitives.aff1.revenue.eval(sc.s1).value -
                        sc.primitives.aff1.cost.eval(sc.s1).value;
    sc.thin_cap = ThinCapRule(frac * eq.vars.y / ebit, 0.0);
    return sc;
}

// Central-difference gradient of the Lagrangian in (x1, x2, y).
inline Vec3 fd_lagrangian_gradient(const Scenario& sc, const DecisionVars& w, int lambda,
                                   double h = 1e-6) {
    Vec3 g{};
    for (int i = 0; i < 3; ++i) {
        DecisionVars up = w, dn = w;
        double* pu[3] = {&up.x1, &up.x2, &up.y};
        double* pd[3] = {&dn.x1, &dn.x2, &dn.y};
        *pu[i] += h;
        *pd[i] -= h;
        g[i] = (lagrangian(sc, up, lambda) - lagrangian(sc, dn, lambda)) / (2.0 * h);
    }
    return g;
}

// Central-difference Jacobian of the FOC vector (the Hessian of L).
inline Mat3 fd_foc_jacobian(const Scenario& sc, const DecisionVars& w, int lambda,
                            double h = 1e-6) {
    Mat3 j{};
    for (int c = 0; c < 3; ++c) {
        DecisionVars up = w, dn = w;
        double* pu[3] = {&up.x1, &up.x2, &up.y};
        double* pd[3] = {&dn.x1, &dn.x2, &dn.y};
        *pu[c] += h;
        *pd[c] -= h;
        const Vec3 fu = foc_residuals(sc, up, lambda);
        const Vec3 fd = foc_residuals(sc, dn, lambda);
        for (int r = 0; r < 3; ++r) j[r][c] = (fu[r] - fd[r]) / (2.0 * h);
    }
    return j;
}

inline double fd_scalar_d1(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double fd_scalar_d2(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

} // namespace testutil
