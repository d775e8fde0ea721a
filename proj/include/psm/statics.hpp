#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "psm/solver.hpp"

namespace psm {

enum class Wrt { t1, t2 };
inline const char* wrt_name(Wrt w) { return w == Wrt::t1 ? "t1" : "t2"; }

enum class StaticsCase { constrained, unconstrained };

enum class Dominance { complementary, substitute, neutral };
inline const char* dominance_name(Dominance d) {
    switch (d) {
        case Dominance::complementary: return "complementary";
        case Dominance::substitute: return "substitute";
        default: return "neutral";
    }
}

inline int weak_sign(double v, double tol = kSignTol) {
    if (v > tol) return 1;
    if (v < -tol) return -1;
    return 0;
}

// Tax-sensitivity derivatives at an equilibrium plus the bounded parameters
// and regime classification the propositions run on.
struct StaticsReport {
    Wrt wrt = Wrt::t1;
    StaticsCase kind = StaticsCase::unconstrained;
    bool binding = false;
    bool has_thin_cap = false;

    double x1T = 0.0, x2T = 0.0, yT = 0.0;
    double sum_xT = 0.0;
    double lambdaT = std::numeric_limits<double>::quiet_NaN(); // constrained only
    double z_plus = 0.0;  // constrained: equals yT; zero otherwise
    double lambda1 = 0.0; // double indicator: lambda* = 1 and wrt = t1

    Vec3 mu{};     // (1 - C_c'/p1, -1 + C_c'/p2, -1 + B_c'/r)
    Vec3 mu_bar{}; // constrained substitution, else equal to mu

    // regularised minors
    double Mt11 = 0.0, Mt22 = 0.0, Mt12 = 0.0, Mt13 = 0.0, Mt23 = 0.0;

    // mean-value interior: L_mu on raw curvatures (constrained) or M_mu on
    // regularised minors (unconstrained); negative where defined
    double interior_value = std::numeric_limits<double>::quiet_NaN();
    double bracket_lo = 0.0, bracket_hi = 0.0;
    bool interior_defined = false;

    double phi_x = std::numeric_limits<double>::quiet_NaN();
    double phi_y = std::numeric_limits<double>::quiet_NaN();
    double phi_lambda = std::numeric_limits<double>::quiet_NaN();
    bool phi_y_defined = false;

    bool mu_same_sign = false; // mixed mu signs leave the solution without a regime verdict
    bool monotone_ok = false;  // -L22*L1y - L11*L2y ~ mu1 - mu2
    Dominance dominance = Dominance::neutral; // sign of -(L22*L1y + L11*L2y)
    bool dominance_regime_ok = false; // adjacent-minor signs + diagonal-minor dominance

    ConditionRegime regime{};
    double p1 = 0.0, p2 = 0.0, r = 0.0;
    double Cp_c = 0.0, Bp_c = 0.0; // marginals indexed by wrt
    double L11 = 0.0, L22 = 0.0, L12 = 0.0, L1y = 0.0, L2y = 0.0, Lyy = 0.0;
    double system_residual = 0.0; // back-substitution residual of the solved system
    double formula_gap = 0.0;     // pivot solve vs per-variable closed forms

    // exact sign decomposition: sum_xT is a positive multiple of
    // main_effect_x + cross_effect_x whenever the interior value is defined
    double main_effect_x = 0.0;
    double cross_effect_x = 0.0;
};

namespace detail {

struct StaticsContext {
    SecondOrderStructure so;
    MinorSet m;
    ConditionRegime regime;
    Vec3 mu;
    double Cp_c, Bp_c;
};

inline StaticsContext statics_context(const Equilibrium& eq, const Scenario& sc, Wrt wrt) {
    StaticsContext cx{second_order(sc, eq.vars), MinorSet{}, check_alp_conditions(sc, eq.vars),
                      Vec3{}, 0.0, 0.0};
    cx.m = minors(cx.so, sc.taxes.t1);
    cx.Cp_c = wrt == Wrt::t1 ? cx.regime.C1p : cx.regime.C2p;
    cx.Bp_c = wrt == Wrt::t1 ? cx.regime.B1p : cx.regime.B2p;
    cx.mu = {1.0 - cx.Cp_c / sc.p1, -1.0 + cx.Cp_c / sc.p2, -1.0 + cx.Bp_c / sc.r};
    return cx;
}

// Shared classification. `mu_eff` is mu (unconstrained) or mu_bar
// (constrained); `b1`/`b2` are the mean-value brackets paired with its
// first and second component.
inline void classify(StaticsReport& rep, const StaticsContext& cx, const Vec3& mu_eff,
                     double b1, double b2) {
    const auto& so = cx.so;
    const auto& m = cx.m;
    rep.Mt11 = m.M11 / m.M33;
    rep.Mt22 = m.M22 / m.M33;
    rep.Mt12 = m.M12 / m.M33;
    rep.Mt13 = m.M13 / m.M33;
    rep.Mt23 = m.M23 / m.M33;
    rep.L11 = so.L11;
    rep.L22 = so.L22;
    rep.L12 = so.L12;
    rep.L1y = so.L1y;
    rep.L2y = so.L2y;
    rep.Lyy = so.Lyy;

    const double min_diag = std::min({m.M11, m.M22, m.M33});
    const double max_adj = std::max({std::fabs(m.M12), std::fabs(m.M13), std::fabs(m.M23)});
    rep.dominance_regime_ok = m.M12 <= kSignTol && m.M13 >= -kSignTol && m.M23 >= -kSignTol &&
                              min_diag > max_adj;

    const double cross = -(so.L22 * so.L1y + so.L11 * so.L2y);
    const int cs = weak_sign(cross);
    rep.dominance = cs > 0 ? Dominance::complementary
                           : (cs < 0 ? Dominance::substitute : Dominance::neutral);

    const int s1 = weak_sign(mu_eff[0]);
    const int s2 = weak_sign(mu_eff[1]);
    rep.mu_same_sign = s1 * s2 >= 0;
    const int dmu = weak_sign(mu_eff[0] - mu_eff[1]);
    rep.monotone_ok = cs == 0 || dmu == 0 || cs == dmu;

    rep.bracket_lo = std::min(b1, b2);
    rep.bracket_hi = std::max(b1, b2);
    const double musum = mu_eff[0] + mu_eff[1];
    if (rep.mu_same_sign && std::fabs(musum) > kSignTol) {
        rep.interior_value = (mu_eff[0] * b1 + mu_eff[1] * b2) / musum;
        rep.interior_defined = true;
    } else if (std::fabs(musum) <= kSignTol && std::fabs(b1 - b2) <= kSignTol) {
        rep.interior_value = 0.5 * (b1 + b2); // degenerate symmetric limit
        rep.interior_defined = true;
    }
}

inline double residual4(const Mat4& a, const Vec4& x, const Vec4& b) {
    const Vec4 ax = linalg::matvec<4>(a, x);
    double res = 0.0, scale = 1.0;
    for (int i = 0; i < 4; ++i) {
        res = std::max(res, std::fabs(ax[i] - b[i]));
        scale = std::max(scale, std::fabs(b[i]));
    }
    return res / scale;
}

inline double residual3(const Mat3& a, const Vec3& x, const Vec3& b) {
    const Vec3 ax = linalg::matvec<3>(a, x);
    double res = 0.0, scale = 1.0;
    for (int i = 0; i < 3; ++i) {
        res = std::max(res, std::fabs(ax[i] - b[i]));
        scale = std::max(scale, std::fabs(b[i]));
    }
    return res / scale;
}

} // namespace detail

// Unconstrained system H (x1T, x2T, yT)' = mu. Also the local system on
// the slack branch of a capped scenario, where the active FOCs coincide
// with the uncapped ones.
inline StaticsReport statics_system_unconstrained(const Equilibrium& eq, const Scenario& sc,
                                                  Wrt wrt) {
    const auto cx = detail::statics_context(eq, sc, wrt);
    const Mat3 h = hessian(cx.so);

    double det = 0.0;
    const auto sol = linalg::solve<3>(h, cx.mu, &det);
    double scale = 0.0;
    for (const auto& row : h)
        for (double v : row) scale = std::max(scale, std::fabs(v));
    if (!sol || std::fabs(det) < 1e-12 * scale * scale * scale) throw SingularSystem(det);

    StaticsReport rep;
    rep.wrt = wrt;
    rep.kind = StaticsCase::unconstrained;
    rep.binding = eq.binding;
    rep.has_thin_cap = sc.constrained();
    rep.x1T = (*sol)[0];
    rep.x2T = (*sol)[1];
    rep.yT = (*sol)[2];
    rep.sum_xT = rep.x1T + rep.x2T;
    rep.mu = cx.mu;
    rep.mu_bar = cx.mu;
    rep.regime = cx.regime;
    rep.p1 = sc.p1;
    rep.p2 = sc.p2;
    rep.r = sc.r;
    rep.Cp_c = cx.Cp_c;
    rep.Bp_c = cx.Bp_c;
    rep.system_residual = detail::residual3(h, *sol, cx.mu);

    const double mt12 = cx.m.M12 / cx.m.M33;
    detail::classify(rep, cx, cx.mu, mt12 - cx.m.M11 / cx.m.M33, mt12 - cx.m.M22 / cx.m.M33);

    if (rep.interior_defined && rep.interior_value < 0.0)
        rep.phi_x = -(rep.Mt13 - rep.Mt23) / rep.interior_value;
    const double musum = cx.mu[0] + cx.mu[1];
    if (rep.monotone_ok && rep.mu_same_sign && std::fabs(musum) > kSignTol) {
        rep.phi_y = (cx.mu[0] * rep.Mt13 - cx.mu[1] * rep.Mt23) / musum;
        rep.phi_y_defined = true;
    }
    rep.main_effect_x = cx.Cp_c / sc.p1 - cx.Cp_c / sc.p2;
    rep.cross_effect_x = std::isnan(rep.phi_x) ? 0.0 : rep.phi_x * (1.0 - cx.Bp_c / sc.r);
    return rep;
}

inline StaticsReport statics_unconstrained(const Equilibrium& eq, const Scenario& sc, Wrt wrt) {
    if (sc.constrained())
        throw ValidationError("statics", "unconstrained statics require thin_cap absent");
    return statics_system_unconstrained(eq, sc, wrt);
}

// Constrained case: the bordered Hessian applied to (lambdaT, x1T, x2T, yT)
// with RHS (-t1 z+, mu1, mu2, mu_r + lambda1). The first row pins
// yT = (ybar - y*)/t1; per-variable closed forms are cross-checked against
// the pivot solve.
inline StaticsReport statics_constrained(const Equilibrium& eq, const Scenario& sc, Wrt wrt) {
    if (!sc.constrained())
        throw ValidationError("statics", "constrained statics require a thin-cap rule");
    const auto cx = detail::statics_context(eq, sc, wrt);
    const double t1 = sc.taxes.t1;
    const double ybar = sc.ybar();
    const double z = eq.binding ? 0.0 : (ybar - eq.vars.y) / t1;
    const double lambda1 = (eq.lambda_star == 1 && wrt == Wrt::t1) ? 1.0 : 0.0;

    const Mat4 hb = bordered_hessian(cx.so, t1);
    const Vec4 rhs{-t1 * z, cx.mu[0], cx.mu[1], cx.mu[2] + lambda1};
    double det = 0.0;
    const auto sol = linalg::solve<4>(hb, rhs, &det);
    if (!sol || std::fabs(cx.m.detHbar) < 1e-12 * std::max(1.0, std::fabs(cx.m.M33)))
        throw SingularSystem(det);

    const Vec3 mu_bar{cx.mu[0] - cx.so.L1y * z, cx.mu[1] - cx.so.L2y * z,
                      cx.mu[2] + lambda1 - cx.so.Lyy * z};

    StaticsReport rep;
    rep.wrt = wrt;
    rep.kind = StaticsCase::constrained;
    rep.binding = eq.binding;
    rep.has_thin_cap = true;
    rep.lambdaT = (*sol)[0];
    rep.x1T = (*sol)[1];
    rep.x2T = (*sol)[2];
    rep.yT = z; // exact, from the L_lambda row; zero at a binding maximum
    rep.z_plus = z;
    rep.lambda1 = lambda1;
    rep.sum_xT = rep.x1T + rep.x2T;
    rep.mu = cx.mu;
    rep.mu_bar = mu_bar;
    rep.regime = cx.regime;
    rep.p1 = sc.p1;
    rep.p2 = sc.p2;
    rep.r = sc.r;
    rep.Cp_c = cx.Cp_c;
    rep.Bp_c = cx.Bp_c;
    rep.system_residual = detail::residual4(hb, {rep.lambdaT, rep.x1T, rep.x2T, (*sol)[3]}, rhs);

    const double x1T_f = (mu_bar[0] * cx.so.L22 - mu_bar[1] * cx.so.L12) / cx.m.M33;
    const double x2T_f = (mu_bar[1] * cx.so.L11 - mu_bar[0] * cx.so.L12) / cx.m.M33;
    const double lamT_f =
        -(mu_bar[0] * cx.m.M13 / cx.m.M33 - mu_bar[1] * cx.m.M23 / cx.m.M33 + mu_bar[2]) / t1;
    const double gap_scale = std::max({1.0, std::fabs(x1T_f), std::fabs(x2T_f), std::fabs(lamT_f)});
    rep.formula_gap = std::max({std::fabs(rep.x1T - x1T_f), std::fabs(rep.x2T - x2T_f),
                                std::fabs(rep.lambdaT - lamT_f), std::fabs((*sol)[3] - z)}) /
                      gap_scale;

    detail::classify(rep, cx, mu_bar, cx.so.L22 - cx.so.L12, cx.so.L11 - cx.so.L12);
    rep.phi_lambda = rep.Mt13 - rep.Mt23;
    rep.main_effect_x = cx.Cp_c / sc.p1 - cx.Cp_c / sc.p2;
    rep.cross_effect_x = z * (cx.so.L1y + cx.so.L2y);
    return rep;
}

// The linear system that actually governs the local solution map: the
// bordered system at a binding equilibrium (where yT = 0 and the x-block
// coincides with the differentiated two-variable FOCs), the plain system
// otherwise. This is the object a finite-difference re-solve measures.
inline StaticsReport statics_local(const Equilibrium& eq, const Scenario& sc, Wrt wrt) {
    if (eq.binding) return statics_constrained(eq, sc, wrt);
    return statics_system_unconstrained(eq, sc, wrt);
}

// ---------------------------------------------------------------------------
// Shadow cost of thin capitalisation
// ---------------------------------------------------------------------------

struct ShadowVerdict {
    bool binding = false;
    int demanded_sign = 0; // -1 at binding, +1 at slack (indicator range argument)
    double lambdaT = std::numeric_limits<double>::quiet_NaN();       // double-indicator system
    double lambdaT_binding_form = std::numeric_limits<double>::quiet_NaN(); // lambda1 = lambda* form
    double phi_lambda = std::numeric_limits<double>::quiet_NaN();
    bool combo_preferred = false; // p1 <= p2 and phi_lambda <= 0
    bool combo_adverse = false;   // p2 <= p1 and phi_lambda >= 0
    bool mean_value_consistent = false;
    bool well_defined = false;
    double term_price = 0.0; // phi_lambda * C_c' (1/p1 - 1/p2)
    double term_rate = 0.0;  // 1 - lambda* - B_c'/r
    double term_drag = 0.0;  // yT+ [phi_lambda (L1y + L2y) + Lyy]
    bool drag_nonpositive = false;
    bool sign_consistent = false;
};

// Shadow-cost decomposition at a constrained equilibrium. Binding: the
// indicator sits at its upper bound, so only a nonpositive variation is
// feasible; the numeric check follows the binding form, which substitutes
// lambda1 = lambda* for either tax rate. Slack: the indicator sits at its
// lower bound and stays there on the whole branch, so the feasible
// variation is nonnegative; the decomposition is reported for analysis.
inline ShadowVerdict lambda_shadow_analysis(const Equilibrium& eq, const Scenario& sc,
                                            const StaticsReport& rep) {
    if (rep.kind != StaticsCase::constrained)
        throw ValidationError("shadow", "constrained statics report required");
    ShadowVerdict v;
    v.binding = eq.binding;
    v.demanded_sign = eq.binding ? -1 : 1;
    v.lambdaT = rep.lambdaT;
    v.phi_lambda = rep.phi_lambda;

    const double t1 = sc.taxes.t1;
    const double lam_star = eq.lambda_star;
    const double d = rep.mu_bar[0] * rep.Mt13 - rep.mu_bar[1] * rep.Mt23;
    const double mu_r_sub = rep.mu[2] + lam_star - rep.Lyy * rep.z_plus;
    v.lambdaT_binding_form = -(d + mu_r_sub) / t1;

    const double price_gap = rep.Cp_c / rep.p1 - rep.Cp_c / rep.p2;
    v.term_price = v.phi_lambda * price_gap;
    v.term_rate = 1.0 - lam_star - rep.Bp_c / rep.r;
    v.term_drag = rep.z_plus * (v.phi_lambda * (rep.L1y + rep.L2y) + rep.Lyy);
    v.drag_nonpositive = v.term_drag <= kSignTol;

    v.combo_preferred = rep.regime.p1_le_p2 && v.phi_lambda <= kSignTol;
    v.combo_adverse = rep.regime.p2_le_p1 && v.phi_lambda >= -kSignTol;
    const double musum = rep.mu_bar[0] + rep.mu_bar[1];
    v.mean_value_consistent =
        weak_sign(d, 1e-12) == 0 || weak_sign(d, 1e-12) == weak_sign(musum * v.phi_lambda, 1e-12);
    v.well_defined = (v.combo_preferred || v.combo_adverse) && v.mean_value_consistent;

    if (eq.binding) {
        v.sign_consistent = v.lambdaT_binding_form <= kSignTol;
    } else {
        v.sign_consistent = true; // indicator at the lower bound of {0,1}
    }
    return v;
}

// ---------------------------------------------------------------------------
// Proposition audits
// ---------------------------------------------------------------------------

struct PropositionVerdict {
    std::string id;
    bool applicable = false;
    std::string predicted; // e.g. "sum_xT >= 0, yT <= 0"
    int predicted_sum = 0; // weak sign demanded of sum_xT (0 = no claim)
    int predicted_yT = 0;  // weak sign demanded of yT (0 = no claim)
    bool same_direction_claim = false;
    bool pass = true;
};

namespace detail {

inline bool matches_weak(double value, int demanded) {
    if (demanded == 0) return true;
    const int s = weak_sign(value);
    return s == 0 || s == demanded;
}

inline PropositionVerdict make_verdict(const std::string& id, bool applicable, int sum_sign,
                                       int yT_sign, const StaticsReport& rep,
                                       bool same_dir = false) {
    PropositionVerdict v;
    v.id = id;
    v.applicable = applicable;
    v.predicted_sum = sum_sign;
    v.predicted_yT = yT_sign;
    v.same_direction_claim = same_dir;
    if (sum_sign != 0) v.predicted = std::string("sum_xT ") + (sum_sign > 0 ? ">= 0" : "<= 0");
    if (yT_sign != 0)
        v.predicted += std::string(v.predicted.empty() ? "" : ", ") + "yT " +
                       (yT_sign > 0 ? ">= 0" : "<= 0");
    if (same_dir) v.predicted += std::string(v.predicted.empty() ? "" : ", ") + "x1T ~ x2T";
    if (!applicable) return v;
    v.pass = matches_weak(rep.sum_xT, sum_sign) && matches_weak(rep.yT, yT_sign);
    if (same_dir) {
        const int a = weak_sign(rep.x1T);
        const int b = weak_sign(rep.x2T);
        v.pass = v.pass && (a * b >= 0);
    }
    return v;
}

} // namespace detail

// One verdict per proposition; premises follow the wrt-indexed marginal
// cost C_c', so a proposition stated through affiliate c's arm's-length
// sandwich applies to the report whose varied rate matches that sandwich.
inline std::vector<PropositionVerdict> audit_propositions(const StaticsReport& rep) {
    std::vector<PropositionVerdict> out;
    const bool sandwich12 = rep.p1 <= rep.Cp_c + kSignTol && rep.Cp_c <= rep.p2 + kSignTol;
    const bool sandwich21 = rep.p2 <= rep.Cp_c + kSignTol && rep.Cp_c <= rep.p1 + kSignTol;
    const bool prices_equal = rep.regime.prices_equal;
    const double cross_sum = rep.L1y + rep.L2y;

    if (rep.kind == StaticsCase::constrained) {
        out.push_back(detail::make_verdict("P1", rep.mu_same_sign, 0, 0, rep, true));
        out.push_back(
            detail::make_verdict("P2", rep.binding && sandwich12 && !prices_equal, +1, 0, rep));
        out.push_back(
            detail::make_verdict("P3", rep.binding && sandwich21 && !prices_equal, -1, 0, rep));
        out.push_back(detail::make_verdict("P4",
                                           !rep.binding && sandwich12 && !prices_equal &&
                                               cross_sum >= -kSignTol && rep.mu_same_sign,
                                           +1, 0, rep));
        out.push_back(detail::make_verdict("P5",
                                           !rep.binding && sandwich21 && !prices_equal &&
                                               cross_sum <= kSignTol && rep.mu_same_sign,
                                           -1, 0, rep));
        // equal transfer prices: the cross-effect alone sets the direction
        const bool sym_applicable =
            prices_equal && (rep.mu_same_sign || std::fabs(rep.L11 - rep.L22) <= kSignTol);
        const int cross_dir = weak_sign(rep.z_plus * cross_sum);
        out.push_back(detail::make_verdict("P-equal-prices", sym_applicable, cross_dir, 0, rep));
    } else {
        const bool cof_lo = rep.Bp_c <= rep.r + kSignTol; // B_c' <= r (wrt = t2 side)
        const bool cof_hi = rep.r <= rep.Bp_c + kSignTol; // r <= B_c' (wrt = t1 side)
        const bool phi_pos = rep.phi_y_defined && !std::isnan(rep.phi_x) &&
                             rep.phi_x >= -kSignTol && rep.phi_y >= -kSignTol;
        const bool phi_neg = rep.phi_y_defined && !std::isnan(rep.phi_x) &&
                             rep.phi_x <= kSignTol && rep.phi_y <= kSignTol;
        const bool base = rep.mu_same_sign && !prices_equal;
        out.push_back(detail::make_verdict(
            "U-A12a2-t2", rep.wrt == Wrt::t2 && base && sandwich12 && cof_lo && phi_pos, +1, +1,
            rep));
        out.push_back(detail::make_verdict(
            "U-A12a2-t1", rep.wrt == Wrt::t1 && base && sandwich12 && cof_hi && phi_neg, +1, -1,
            rep));
        out.push_back(detail::make_verdict(
            "U-A12a1-t1", rep.wrt == Wrt::t1 && base && sandwich21 && cof_hi && phi_pos, -1, -1,
            rep));
        out.push_back(detail::make_verdict(
            "U-A12a1-t2", rep.wrt == Wrt::t2 && base && sandwich21 && cof_lo && phi_neg, -1, +1,
            rep));
        // equal transfer prices: sign(sum_xT) = sign(phi (1 - B_c'/r))
        const bool sym = prices_equal && std::fabs(rep.Mt11 - rep.Mt22) <= kSignTol &&
                         !std::isnan(rep.phi_x);
        const int cross_dir = weak_sign(rep.phi_x * (1.0 - rep.Bp_c / rep.r));
        out.push_back(detail::make_verdict("U-equal-prices", sym, cross_dir, 0, rep));
    }
    return out;
}

} // namespace psm
