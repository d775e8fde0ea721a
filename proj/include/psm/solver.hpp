#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "psm/model.hpp"

namespace psm {

inline constexpr double kFocTol = 1e-9;     // convergence on the active FOC inf-norm
inline constexpr double kBindingTol = 1e-9; // |y* - ybar| classification band
inline constexpr int kMaxIterations = 200;
inline constexpr int kMaxHalvings = 40;

struct CertificateEntry {
    const char* name;
    double value;
    int required_sign; // +1 strictly positive, -1 strictly negative
    bool ok;
};

struct CertificateReport {
    bool binding_branch = false;
    std::vector<CertificateEntry> entries;
    bool pass = false;
};

struct Equilibrium {
    DecisionVars vars;
    int lambda_star = 0;
    bool binding = false;
    double foc_norm = 0.0; // active-subsystem residual
    MinorSet minor_set{};
    double objective = 0.0;
    int iterations = 0;
    std::array<bool, 3> at_lower_bound{false, false, false}; // x1, x2, y pinned at 0
    bool kink_lower_ok = true; // binding: L_y(lambda=0) >= 0 at the cap
    bool kink_upper_ok = true; // binding: L_y(lambda=1) <= 0 at the cap

    bool boundary() const { return at_lower_bound[0] || at_lower_bound[1] || at_lower_bound[2]; }
};

namespace detail {

inline std::optional<double> try_lagrangian(const Scenario& sc, const DecisionVars& w,
                                            int lambda) {
    try {
        return lagrangian(sc, w, lambda);
    } catch (const Error&) {
        return std::nullopt;
    }
}

struct NewtonResult {
    DecisionVars vars;
    double foc_norm = 0.0;
    int iterations = 0;
    std::array<bool, 3> pinned{false, false, false};
};

// Damped Newton on the FOC rows selected by `free_mask`, maximising the
// Lagrangian with the analytic Hessian. Backtracking halves the step while
// the trial point is invalid or the objective degrades. Nonnegativity is
// kept by projection; a coordinate projected to 0 on two consecutive
// iterations is pinned and its FOC row dropped.
inline NewtonResult newton_max(const Scenario& sc, DecisionVars w, int lambda,
                               std::array<bool, 3> free_mask) {
    const Mat3 h = hessian(second_order(sc, w));
    std::array<bool, 3> pinned{false, false, false};
    std::array<int, 3> zero_streak{0, 0, 0};

    auto active_residual = [&](const DecisionVars& v) {
        const Vec3 f = foc_residuals(sc, v, lambda);
        double m = 0.0;
        for (int i = 0; i < 3; ++i)
            if (free_mask[i] && !pinned[i]) m = std::max(m, std::fabs(f[i]));
        return m;
    };

    const auto seed_obj = try_lagrangian(sc, w, lambda);
    if (!seed_obj) throw NonConvergence(0, std::numeric_limits<double>::infinity());
    double cur_obj = *seed_obj;

    int it = 0;
    for (; it < kMaxIterations; ++it) {
        if (active_residual(w) <= kFocTol) break;
        const Vec3 f = foc_residuals(sc, w, lambda);

        std::array<int, 3> idx{};
        int n = 0;
        for (int i = 0; i < 3; ++i)
            if (free_mask[i] && !pinned[i]) idx[n++] = i;
        if (n == 0) break;

        // H_aa * step = -F_a on the active block
        Vec3 step{0.0, 0.0, 0.0};
        bool solved = false;
        if (n == 3) {
            if (auto s = linalg::solve<3>(h, {-f[0], -f[1], -f[2]})) {
                step = *s;
                solved = true;
            }
        } else if (n == 2) {
            std::array<std::array<double, 2>, 2> a{
                {{h[idx[0]][idx[0]], h[idx[0]][idx[1]]}, {h[idx[1]][idx[0]], h[idx[1]][idx[1]]}}};
            if (auto s = linalg::solve<2>(a, {-f[idx[0]], -f[idx[1]]})) {
                step = {(*s)[0], (*s)[1], 0.0};
                solved = true;
            }
        } else if (h[idx[0]][idx[0]] != 0.0) {
            step = {-f[idx[0]] / h[idx[0]][idx[0]], 0.0, 0.0};
            solved = true;
        }
        if (!solved) throw NonConvergence(it, active_residual(w));

        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half <= kMaxHalvings; ++half, t *= 0.5) {
            DecisionVars trial = w;
            double* coords[3] = {&trial.x1, &trial.x2, &trial.y};
            for (int r = 0; r < n; ++r)
                *coords[idx[r]] = std::max(0.0, *coords[idx[r]] + t * step[r]);
            const auto obj = try_lagrangian(sc, trial, lambda);
            if (!obj) continue;
            if (*obj >= cur_obj - 1e-14 * (1.0 + std::fabs(cur_obj))) {
                w = trial;
                cur_obj = *obj;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NonConvergence(it, active_residual(w));

        const double* coords[3] = {&w.x1, &w.x2, &w.y};
        for (int r = 0; r < n; ++r) {
            const int i = idx[r];
            if (*coords[i] == 0.0) {
                if (++zero_streak[i] >= 2) pinned[i] = true;
            } else {
                zero_streak[i] = 0;
            }
        }
    }

    const double res = active_residual(w);
    if (res > kFocTol) throw NonConvergence(it, res);
    return {w, res, it, pinned};
}

} // namespace detail

inline DecisionVars default_seed(const Scenario& sc) {
    DecisionVars w;
    w.x1 = 0.1 * sc.p1;
    w.x2 = 0.1 * sc.p1;
    w.y = sc.constrained() ? std::min(0.1, 0.5 * sc.ybar()) : 0.1;
    return w;
}

inline CertificateReport certify(const Equilibrium& eq, const Scenario& sc) {
    (void)sc;
    const MinorSet& m = eq.minor_set;
    CertificateReport rep;
    rep.binding_branch = eq.binding;
    if (eq.binding) {
        rep.entries = {{"Mbar22", m.Mbar22, +1, m.Mbar22 > 0.0},
                       {"Mbar33", m.Mbar33, +1, m.Mbar33 > 0.0},
                       {"detHbar", m.detHbar, -1, m.detHbar < 0.0}};
    } else {
        rep.entries = {{"M11", m.M11, +1, m.M11 > 0.0},
                       {"M22", m.M22, +1, m.M22 > 0.0},
                       {"M33", m.M33, +1, m.M33 > 0.0},
                       {"detH", m.detH, -1, m.detH < 0.0}};
    }
    rep.pass = true;
    for (const auto& e : rep.entries) rep.pass = rep.pass && e.ok;
    return rep;
}

// Find the firm's maximum. Branch A solves the three-variable FOC with
// lambda = 0; with a thin-cap rule present and branch A at or above ybar,
// branch B re-solves with y pinned at ybar and lambda = 1. Binding
// equilibria carry the kink consistency L_y(0) >= 0 >= L_y(1); a scenario
// whose lambda = 1 FOC still demands y > ybar is outside the analysed
// regime and raises ExceedsThinCapRegime instead of being solved.
inline Equilibrium solve(const Scenario& sc, std::optional<DecisionVars> init = std::nullopt) {
    const DecisionVars seed = init ? *init : default_seed(sc);
    const bool seed_feasible = !sc.constrained() || seed.y <= sc.ybar() + kBindingTol;
    const double seed_obj =
        detail::try_lagrangian(sc, seed, 0).value_or(-std::numeric_limits<double>::infinity());

    Equilibrium eq;
    bool need_branch_b = false;
    int iters_a = 0;
    try {
        auto a = detail::newton_max(sc, seed, 0, {true, true, true});
        eq.vars = a.vars;
        eq.foc_norm = a.foc_norm;
        eq.iterations = iters_a = a.iterations;
        eq.at_lower_bound = a.pinned;
        need_branch_b = sc.constrained() && a.vars.y >= sc.ybar() - kBindingTol;
    } catch (const NonConvergence&) {
        // The uncapped optimum may sit outside the validity region while the
        // capped one is fine; fall through to branch B when a rule exists.
        if (!sc.constrained()) throw;
        need_branch_b = true;
        iters_a = kMaxIterations;
    }

    if (need_branch_b) {
        const double ybar = sc.ybar();
        DecisionVars w = seed;
        w.x1 = eq.vars.x1 > 0.0 ? eq.vars.x1 : seed.x1;
        w.x2 = eq.vars.x2 > 0.0 ? eq.vars.x2 : seed.x2;
        w.y = ybar;
        auto b = detail::newton_max(sc, w, 1, {true, true, false});
        eq.vars = b.vars;
        eq.vars.y = ybar; // exact by construction
        eq.lambda_star = 1;
        eq.binding = true;
        eq.foc_norm = b.foc_norm;
        eq.iterations = iters_a + b.iterations;
        eq.at_lower_bound = b.pinned;
        const double ly0 = foc_residuals(sc, eq.vars, 0)[2];
        eq.kink_lower_ok = ly0 >= -kSignTol;
        eq.kink_upper_ok = ly0 - sc.taxes.t1 <= kSignTol;
        if (!eq.kink_upper_ok) throw ExceedsThinCapRegime(ly0 - sc.taxes.t1);
        if (!eq.kink_lower_ok) throw NonConvergence(eq.iterations, std::fabs(ly0));
    }

    eq.minor_set = minors(second_order(sc, eq.vars), sc.taxes.t1);
    eq.objective = lagrangian(sc, eq.vars, eq.lambda_star);
    if (seed_feasible && eq.objective < seed_obj - 1e-9)
        throw NonConvergence(eq.iterations, eq.foc_norm);
    return eq;
}

} // namespace psm
