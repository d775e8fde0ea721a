#pragma once

#include <cmath>

#include "psm/statics.hpp"

namespace psm {

struct OracleReport {
    Wrt wrt = Wrt::t1;
    double step = 1e-4;
    double fd_x1T = 0.0, fd_x2T = 0.0, fd_yT = 0.0;
    double an_x1T = 0.0, an_x2T = 0.0, an_yT = 0.0;
    Vec3 rel_err{};
    double max_rel_err = 0.0;
    bool branch_crossing = false; // perturbed solves changed branch; comparison suppressed
    bool boundary = false;        // nonnegativity active somewhere; local system does not apply
    bool lambda_locally_constant = false; // indicator identical on both perturbed solves

    bool comparable() const { return !branch_crossing && !boundary; }
};

namespace detail {

inline Scenario with_taxes(const Scenario& sc, double t1, double t2) {
    Scenario out = sc;
    out.taxes = TaxRegime(t1, t2);
    return out;
}

inline double rel_gap(double fd, double an) {
    return std::fabs(fd - an) / std::max(std::fabs(an), 1e-8);
}

} // namespace detail

// Central differences of (x1*, x2*, y*) across full re-solves at t_c +- h,
// compared against the linear system of the active branch. Derivatives are
// reported with respect to T: a t2 variation carries dT/dt2 = -1. Perturbed
// solves warm-start from the base equilibrium; if either lands on the other
// branch the report is flagged BranchCrossing and comparison is suppressed.
inline OracleReport fd_statics(const Scenario& sc, Wrt wrt, double step = 1e-4) {
    OracleReport rep;
    rep.wrt = wrt;
    rep.step = step;

    const Equilibrium base = solve(sc);
    rep.boundary = base.boundary();

    const double t1 = sc.taxes.t1;
    const double t2 = sc.taxes.t2;
    Scenario up = wrt == Wrt::t1 ? detail::with_taxes(sc, t1 + step, t2)
                                 : detail::with_taxes(sc, t1, t2 + step);
    Scenario dn = wrt == Wrt::t1 ? detail::with_taxes(sc, t1 - step, t2)
                                 : detail::with_taxes(sc, t1, t2 - step);
    const Equilibrium eu = solve(up, base.vars);
    const Equilibrium ed = solve(dn, base.vars);

    rep.branch_crossing = eu.binding != base.binding || ed.binding != base.binding;
    rep.lambda_locally_constant = eu.lambda_star == ed.lambda_star &&
                                  eu.lambda_star == base.lambda_star;
    rep.boundary = rep.boundary || eu.boundary() || ed.boundary();

    // dT/dt1 = 1, dT/dt2 = -1
    const double sgn = wrt == Wrt::t1 ? 1.0 : -1.0;
    const double inv = sgn / (2.0 * step);
    rep.fd_x1T = (eu.vars.x1 - ed.vars.x1) * inv;
    rep.fd_x2T = (eu.vars.x2 - ed.vars.x2) * inv;
    rep.fd_yT = (eu.vars.y - ed.vars.y) * inv;

    const StaticsReport an = statics_local(base, sc, wrt);
    rep.an_x1T = an.x1T;
    rep.an_x2T = an.x2T;
    rep.an_yT = an.yT;

    if (rep.comparable()) {
        rep.rel_err = {detail::rel_gap(rep.fd_x1T, an.x1T), detail::rel_gap(rep.fd_x2T, an.x2T),
                       detail::rel_gap(rep.fd_yT, an.yT)};
        rep.max_rel_err = std::max({rep.rel_err[0], rep.rel_err[1], rep.rel_err[2]});
    }
    return rep;
}

struct GridResult {
    DecisionVars best_vars;
    double best_objective = -std::numeric_limits<double>::infinity();
    long evaluated = 0;
    long invalid = 0;
};

// Exhaustive lattice evaluation of the Lagrangian with branch-consistent
// indicator (lambda = 1 iff a rule exists and y >= ybar). Points outside
// some validity region are skipped.
inline GridResult grid_oracle(const Scenario& sc, const DecisionVars& lo, const DecisionVars& hi,
                              int n) {
    if (n < 1) throw ValidationError("grid.n", "lattice size must be >= 1");
    const double ybar = sc.constrained() ? sc.ybar() : 0.0;
    GridResult res;
    auto coord = [n](double a, double b, int i) {
        return n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                DecisionVars w{coord(lo.x1, hi.x1, i), coord(lo.x2, hi.x2, j),
                               coord(lo.y, hi.y, k)};
                const int lam = sc.constrained() && w.y >= ybar ? 1 : 0;
                ++res.evaluated;
                const auto obj = detail::try_lagrangian(sc, w, lam);
                if (!obj) {
                    ++res.invalid;
                    continue;
                }
                if (*obj > res.best_objective) {
                    res.best_objective = *obj;
                    res.best_vars = w;
                }
            }
    return res;
}

// Lattice search followed by box-shrinking refinement around the incumbent.
inline GridResult grid_oracle_refined(const Scenario& sc, const DecisionVars& lo,
                                      const DecisionVars& hi, int n, int refinements = 6) {
    GridResult best = grid_oracle(sc, lo, hi, n);
    DecisionVars clo = lo, chi = hi;
    for (int pass = 0; pass < refinements; ++pass) {
        const double wx1 = (chi.x1 - clo.x1) / std::max(1, n - 1);
        const double wx2 = (chi.x2 - clo.x2) / std::max(1, n - 1);
        const double wy = (chi.y - clo.y) / std::max(1, n - 1);
        clo = {std::max(0.0, best.best_vars.x1 - wx1), std::max(0.0, best.best_vars.x2 - wx2),
               std::max(0.0, best.best_vars.y - wy)};
        chi = {best.best_vars.x1 + wx1, best.best_vars.x2 + wx2, best.best_vars.y + wy};
        GridResult g = grid_oracle(sc, clo, chi, n);
        g.evaluated += best.evaluated;
        g.invalid += best.invalid;
        if (g.best_objective > best.best_objective) best = g;
        else { best.evaluated = g.evaluated; best.invalid = g.invalid; }
    }
    return best;
}

// A box guaranteed to contain the given point, sized to its scale.
inline std::pair<DecisionVars, DecisionVars> default_box(const DecisionVars& center) {
    auto radius = [](double v) { return std::max(0.5, 0.35 * std::fabs(v)); };
    DecisionVars lo{std::max(0.0, center.x1 - radius(center.x1)),
                    std::max(0.0, center.x2 - radius(center.x2)),
                    std::max(0.0, center.y - radius(center.y))};
    DecisionVars hi{center.x1 + radius(center.x1), center.x2 + radius(center.x2),
                    center.y + radius(center.y)};
    return {lo, hi};
}

} // namespace psm
