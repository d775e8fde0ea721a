#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "psm/forms.hpp"

namespace psm {

// Country 1 is the high-tax country: T = t1 - t2 >= 0. Equality is allowed
// at the type level for symmetric diagnostics; the scenario pipeline
// requires strictly positive T (see Scenario::validate).
struct TaxRegime {
    TaxRegime(double t1_, double t2_) : t1(t1_), t2(t2_) {
        if (!(t1 >= 0.0 && t1 <= 1.0)) throw ValidationError("taxes.t1", "t1 in [0,1] required");
        if (!(t2 >= 0.0 && t2 <= 1.0)) throw ValidationError("taxes.t2", "t2 in [0,1] required");
        if (t1 < t2) throw ValidationError("taxes", "T = t1 - t2 > 0 required");
    }
    double t1;
    double t2;
    double T() const { return t1 - t2; }
};

struct AffiliatePrimitives {
    QuadraticRevenue revenue;
    QuadraticCost cost;
    BankInterestSchedule bank;
};

struct FirmPrimitives {
    AffiliatePrimitives aff1;
    AffiliatePrimitives aff2;
    ConcealmentQuadratic f; // concealment cost borne in country 1
    ConcealmentQuadratic g; // concealment cost borne in country 2
};

// Everything exogenous to one firm maximisation.
struct Scenario {
    TaxRegime taxes;
    double p1; // transfer price charged by affiliate 1
    double p2; // transfer price charged by affiliate 2
    double r;  // internal interest rate
    double s1; // market sales, affiliate 1
    double s2; // market sales, affiliate 2
    FirmPrimitives primitives;
    std::optional<ThinCapRule> thin_cap; // absent <=> unconstrained case

    bool constrained() const { return thin_cap.has_value(); }

    double ybar() const {
        if (!thin_cap) throw MissingThinCap();
        return thin_cap_limit(*thin_cap, primitives.aff1.revenue, primitives.aff1.cost, s1);
    }

    // Pipeline-level checks beyond what constructors enforce.
    void validate() const {
        if (!(p1 > 0.0)) throw ValidationError("prices.p1", "p1 > 0 required");
        if (!(p2 > 0.0)) throw ValidationError("prices.p2", "p2 > 0 required");
        if (!(r > 0.0)) throw ValidationError("prices.r", "r > 0 required");
        if (!(taxes.T() > 0.0)) throw ValidationError("taxes", "T = t1 - t2 > 0 required");
        primitives.aff1.revenue.eval(s1);
        primitives.aff2.revenue.eval(s2);
        primitives.aff1.cost.eval(s1);
        primitives.aff2.cost.eval(s2);
    }
};

// The firm's choice variables. q1 = x1/p1, q2 = x2/p2 and b = y/r follow.
struct DecisionVars {
    double x1 = 0.0;
    double x2 = 0.0;
    double y = 0.0;
};

// One-point evaluation of every scenario primitive the FOCs touch.
struct PointEval {
    double u1, u2;     // cost arguments s_c + q_c - q_{-c}
    double d1, d2;     // net bank debt D1 - b, D2 + b
    Deriv C1, C2;      // total cost and derivatives at u_c
    Deriv B1, B2;      // bank interest and derivatives at d_c
    Vec3 fg, gg;       // concealment gradients kappa + Kv (positive parts)
    double f_cost, g_cost;
    double Cn1;        // (1-t1)C1' - (1-t2)C2'
    double Bn1;        // (1-t1)B1' - (1-t2)B2'
};

inline PointEval evaluate_point(const Scenario& sc, const DecisionVars& w) {
    if (!(w.x1 >= 0.0 && w.x2 >= 0.0 && w.y >= 0.0))
        throw ValidationError("vars", "x1, x2, y must be nonnegative");
    PointEval pe{};
    const double q1 = w.x1 / sc.p1;
    const double q2 = w.x2 / sc.p2;
    const double b = w.y / sc.r;
    pe.u1 = sc.s1 + q1 - q2;
    pe.u2 = sc.s2 + q2 - q1;
    pe.d1 = sc.primitives.aff1.bank.baseline_debt() - b;
    pe.d2 = sc.primitives.aff2.bank.baseline_debt() + b;
    pe.C1 = sc.primitives.aff1.cost.eval(pe.u1);
    pe.C2 = sc.primitives.aff2.cost.eval(pe.u2);
    pe.B1 = sc.primitives.aff1.bank.eval(pe.d1);
    pe.B2 = sc.primitives.aff2.bank.eval(pe.d2);
    const Vec3 vf = signed_argument(Orientation::f, w.x1, w.x2, w.y);
    const Vec3 vg = signed_argument(Orientation::g, w.x1, w.x2, w.y);
    pe.fg = sc.primitives.f.grad_v(vf);
    pe.gg = sc.primitives.g.grad_v(vg);
    for (int i = 0; i < 3; ++i) {
        if (!(pe.fg[i] > 0.0))
            throw MonotonicityViolation("concealment cost f: gradient component " +
                                        std::to_string(i) + " nonpositive");
        if (!(pe.gg[i] > 0.0))
            throw MonotonicityViolation("concealment cost g: gradient component " +
                                        std::to_string(i) + " nonpositive");
    }
    pe.f_cost = sc.primitives.f.value(vf);
    pe.g_cost = sc.primitives.g.value(vg);
    const double k1 = 1.0 - sc.taxes.t1;
    const double k2 = 1.0 - sc.taxes.t2;
    pe.Cn1 = k1 * pe.C1.d1 - k2 * pe.C2.d1;
    pe.Bn1 = k1 * pe.B1.d1 - k2 * pe.B2.d1;
    return pe;
}

// Net profit per affiliate.
inline std::pair<double, double> net_profits(const Scenario& sc, const DecisionVars& w) {
    const PointEval pe = evaluate_point(sc, w);
    const double r1 = sc.primitives.aff1.revenue.eval(sc.s1).value;
    const double r2 = sc.primitives.aff2.revenue.eval(sc.s2).value;
    const double pi1 =
        (1.0 - sc.taxes.t1) * (r1 - pe.C1.value - pe.B1.value + w.x1 - w.x2 - w.y);
    const double pi2 =
        (1.0 - sc.taxes.t2) * (r2 - pe.C2.value - pe.B2.value - w.x1 + w.x2 + w.y);
    return {pi1, pi2};
}

// L = pi1 + pi2 - f - g - lambda * t1 * (y - ybar).
inline double lagrangian(const Scenario& sc, const DecisionVars& w, int lambda) {
    if (lambda != 0 && lambda != 1)
        throw ValidationError("lambda", "indicator must be 0 or 1");
    const auto [pi1, pi2] = net_profits(sc, w);
    const PointEval pe = evaluate_point(sc, w);
    double value = pi1 + pi2 - pe.f_cost - pe.g_cost;
    if (lambda == 1) value -= sc.taxes.t1 * (w.y - sc.ybar());
    return value;
}

// Gradient of the Lagrangian in (x1, x2, y).
inline Vec3 foc_residuals(const Scenario& sc, const DecisionVars& w, int lambda) {
    if (lambda == 1 && !sc.constrained()) throw MissingThinCap();
    const PointEval pe = evaluate_point(sc, w);
    const double T = sc.taxes.T();
    return {-T - pe.Cn1 / sc.p1 + pe.fg[0] - pe.gg[0],
            T + pe.Cn1 / sc.p2 - pe.fg[1] + pe.gg[1],
            T + pe.Bn1 / sc.r - pe.fg[2] + pe.gg[2] - lambda * sc.taxes.t1};
}

// Second derivatives of the Lagrangian. Constant for the quadratic
// families, but the point is still validity-checked.
struct SecondOrderStructure {
    double L11, L22, Lyy; // own curvature, all < 0
    double L12;           // > 0
    double L1y;           // >= 0
    double L2y;           // <= 0
    double lambda_cross;  // L_y-lambda = -t1
};

inline SecondOrderStructure second_order(const Scenario& sc, const DecisionVars& w) {
    evaluate_point(sc, w);
    const double k1 = 1.0 - sc.taxes.t1;
    const double k2 = 1.0 - sc.taxes.t2;
    const double cpp = k1 * sc.primitives.aff1.cost.c2() + k2 * sc.primitives.aff2.cost.c2();
    const double bpp = k1 * sc.primitives.aff1.bank.beta2() + k2 * sc.primitives.aff2.bank.beta2();
    const Mat3& kf = sc.primitives.f.K();
    const Mat3& kg = sc.primitives.g.K();
    SecondOrderStructure so{};
    so.L11 = -cpp / (sc.p1 * sc.p1) - kf[0][0] - kg[0][0];
    so.L22 = -cpp / (sc.p2 * sc.p2) - kf[1][1] - kg[1][1];
    so.Lyy = -bpp / (sc.r * sc.r) - kf[2][2] - kg[2][2];
    so.L12 = cpp / (sc.p1 * sc.p2) + kf[0][1] + kg[0][1];
    so.L1y = kf[0][2] + kg[0][2];
    so.L2y = -(kf[1][2] + kg[1][2]);
    so.lambda_cross = -sc.taxes.t1;
    if (!(so.L11 < 0.0)) throw SignPatternViolation("L11", so.L11);
    if (!(so.L22 < 0.0)) throw SignPatternViolation("L22", so.L22);
    if (!(so.Lyy < 0.0)) throw SignPatternViolation("Lyy", so.Lyy);
    if (!(so.L12 > 0.0)) throw SignPatternViolation("L12", so.L12);
    if (!(so.L1y >= 0.0)) throw SignPatternViolation("L1y", so.L1y);
    if (!(so.L2y <= 0.0)) throw SignPatternViolation("L2y", so.L2y);
    return so;
}

inline Mat3 hessian(const SecondOrderStructure& so) {
    return {{{so.L11, so.L12, so.L1y}, {so.L12, so.L22, so.L2y}, {so.L1y, so.L2y, so.Lyy}}};
}

inline Mat4 bordered_hessian(const SecondOrderStructure& so, double t1) {
    return {{{0.0, 0.0, 0.0, -t1},
             {0.0, so.L11, so.L12, so.L1y},
             {0.0, so.L12, so.L22, so.L2y},
             {-t1, so.L1y, so.L2y, so.Lyy}}};
}

// Every minor the second-order analysis uses. Signs are reported, not
// judged here; the caller applies the branch-appropriate certificate.
struct MinorSet {
    double M11, M22, M33; // diagonal minors of H, > 0 at a maximum
    double detH;          // < 0 at a maximum
    double Mbar22, Mbar33; // bordered diagonal minors, > 0 at a maximum
    double detHbar;        // < 0 at a maximum; equals -M33 * t1^2
    double Mbar14;         // equals -t1 * M33, < 0
    double M12, M13, M23;  // adjacent minors; dominance regime: M12<=0<=M13,M23
};

inline MinorSet minors(const SecondOrderStructure& so, double t1) {
    MinorSet m{};
    m.M11 = so.L22 * so.Lyy - so.L2y * so.L2y;
    m.M22 = so.L11 * so.Lyy - so.L1y * so.L1y;
    m.M33 = so.L11 * so.L22 - so.L12 * so.L12;
    m.detH = so.L11 * so.L22 * so.Lyy + 2.0 * so.L12 * so.L1y * so.L2y -
             so.L11 * so.L2y * so.L2y - so.L22 * so.L1y * so.L1y - so.Lyy * so.L12 * so.L12;
    m.Mbar22 = -so.L22 * t1 * t1;
    m.Mbar33 = -so.L11 * t1 * t1;
    m.detHbar = -m.M33 * t1 * t1;
    m.Mbar14 = -t1 * m.M33;
    m.M12 = so.Lyy * so.L12 - so.L1y * so.L2y;
    m.M13 = so.L12 * so.L2y - so.L22 * so.L1y;
    m.M23 = so.L11 * so.L2y - so.L12 * so.L1y;
    return m;
}

// Tolerance for inequality/equality classification on currency and rate
// scales; regime classification must be reproducible.
inline constexpr double kSignTol = 1e-9;

// Arm's-length condition checks, marginal values taken at the given point.
struct ConditionRegime {
    bool cost_plus1, cost_plus2;       // C_c' <= p_c
    bool resale_price1, resale_price2; // p_{-c} <= C_c'
    bool cost_of_funds;                // B2' <= r <= B1'
    bool p1_le_p2, p2_le_p1, prices_equal;
    double C1p, C2p, B1p, B2p;
};

inline ConditionRegime check_alp_conditions(const Scenario& sc, const DecisionVars& w) {
    const PointEval pe = evaluate_point(sc, w);
    ConditionRegime c{};
    c.C1p = pe.C1.d1;
    c.C2p = pe.C2.d1;
    c.B1p = pe.B1.d1;
    c.B2p = pe.B2.d1;
    c.cost_plus1 = c.C1p <= sc.p1 + kSignTol;
    c.cost_plus2 = c.C2p <= sc.p2 + kSignTol;
    c.resale_price1 = sc.p2 <= c.C1p + kSignTol;
    c.resale_price2 = sc.p1 <= c.C2p + kSignTol;
    c.cost_of_funds = (c.B2p <= sc.r + kSignTol) && (sc.r <= c.B1p + kSignTol);
    c.p1_le_p2 = sc.p1 <= sc.p2 + kSignTol;
    c.p2_le_p1 = sc.p2 <= sc.p1 + kSignTol;
    c.prices_equal = std::fabs(sc.p1 - sc.p2) <= kSignTol;
    return c;
}

// Stationary market sales R_c'(s) = C_c'(s + q_c - q_{-c}); closed form for
// the quadratic families, unique maximum since R'' < 0 < C''.
inline std::pair<double, double> solve_market_sales(const Scenario& sc, double q1 = 0.0,
                                                    double q2 = 0.0) {
    auto one = [](const AffiliatePrimitives& a, double delta, const char* which) {
        const double s = (a.revenue.a() - a.cost.c1() - a.cost.c2() * delta) /
                         (a.revenue.b() + a.cost.c2());
        if (!(s > 0.0) || !(s < a.revenue.max_sales()))
            throw NoInteriorSolution(std::string("market sales root outside validity for ") +
                                     which);
        a.cost.eval(s + delta); // C' > 0 at the root or the region is invalid
        return s;
    };
    return {one(sc.primitives.aff1, q1 - q2, "affiliate 1"),
            one(sc.primitives.aff2, q2 - q1, "affiliate 2")};
}

} // namespace psm
