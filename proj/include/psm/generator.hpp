#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "psm/oracle.hpp"

namespace psm {

// Deterministic, platform-independent stream: splitmix64 mapped to [0,1)
// through the top 53 bits. Standard-library distributions are avoided so
// identical seeds reproduce identical scenario sequences everywhere.
struct Rng {
    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    bool coin() { return (next_u64() & 1u) != 0u; }

    std::uint64_t state;
};

// Named premise regimes a sweep can target. The audits re-verify every
// premise post-solve; generation only biases the draw toward it.
enum class RegimeFilter {
    none,
    P1,        // constrained, same-sign mu_bar
    P2,        // binding, p1 <= C_c' <= p2
    P3,        // binding, p2 <= C_c' <= p1
    P4,        // slack, p1 <= C_c' <= p2, complementary cross
    P5,        // slack, p2 <= C_c' <= p1, substitute cross
    U_a2_t2,   // unconstrained, p1 <= C' <= p2, B2' <= r, phi >= 0
    U_a2_t1,   // unconstrained, p1 <= C' <= p2, r <= B1', phi <= 0
    U_a1_t1,   // unconstrained, p2 <= C' <= p1, r <= B1', phi >= 0
    U_a1_t2,   // unconstrained, p2 <= C' <= p1, B2' <= r, phi <= 0
    neutral,   // p1 = p2, no cross-effects, symmetric curvature
    cross_sym, // p1 = p2, nonzero symmetric cross-effects
    shadow_binding,
    shadow_slack,
};

inline std::optional<RegimeFilter> regime_from_name(const std::string& s) {
    if (s.empty() || s == "none") return RegimeFilter::none;
    if (s == "P1") return RegimeFilter::P1;
    if (s == "P2") return RegimeFilter::P2;
    if (s == "P3") return RegimeFilter::P3;
    if (s == "P4") return RegimeFilter::P4;
    if (s == "P5") return RegimeFilter::P5;
    if (s == "U-A12a2-t2") return RegimeFilter::U_a2_t2;
    if (s == "U-A12a2-t1") return RegimeFilter::U_a2_t1;
    if (s == "U-A12a1-t1") return RegimeFilter::U_a1_t1;
    if (s == "U-A12a1-t2") return RegimeFilter::U_a1_t2;
    if (s == "neutral") return RegimeFilter::neutral;
    if (s == "cross-sym") return RegimeFilter::cross_sym;
    if (s == "shadow-binding") return RegimeFilter::shadow_binding;
    if (s == "shadow-slack") return RegimeFilter::shadow_slack;
    return std::nullopt;
}

inline const char* regime_name(RegimeFilter f) {
    switch (f) {
        case RegimeFilter::none: return "none";
        case RegimeFilter::P1: return "P1";
        case RegimeFilter::P2: return "P2";
        case RegimeFilter::P3: return "P3";
        case RegimeFilter::P4: return "P4";
        case RegimeFilter::P5: return "P5";
        case RegimeFilter::U_a2_t2: return "U-A12a2-t2";
        case RegimeFilter::U_a2_t1: return "U-A12a2-t1";
        case RegimeFilter::U_a1_t1: return "U-A12a1-t1";
        case RegimeFilter::U_a1_t2: return "U-A12a1-t2";
        case RegimeFilter::neutral: return "neutral";
        case RegimeFilter::cross_sym: return "cross-sym";
        case RegimeFilter::shadow_binding: return "shadow-binding";
        case RegimeFilter::shadow_slack: return "shadow-slack";
    }
    return "none";
}

namespace detail {

inline bool wants_binding(RegimeFilter f) {
    return f == RegimeFilter::P2 || f == RegimeFilter::P3 || f == RegimeFilter::shadow_binding;
}
inline bool wants_slack_cap(RegimeFilter f) {
    return f == RegimeFilter::P4 || f == RegimeFilter::P5 || f == RegimeFilter::shadow_slack ||
           f == RegimeFilter::P1;
}
inline bool wants_unconstrained(RegimeFilter f) {
    return f == RegimeFilter::U_a2_t2 || f == RegimeFilter::U_a2_t1 ||
           f == RegimeFilter::U_a1_t1 || f == RegimeFilter::U_a1_t2 ||
           f == RegimeFilter::neutral || f == RegimeFilter::cross_sym;
}
inline bool wants_p1_le_p2(RegimeFilter f) {
    return f == RegimeFilter::P2 || f == RegimeFilter::P4 || f == RegimeFilter::U_a2_t2 ||
           f == RegimeFilter::U_a2_t1;
}
inline bool wants_equal_prices(RegimeFilter f) {
    return f == RegimeFilter::neutral || f == RegimeFilter::cross_sym;
}
inline bool wants_complement(RegimeFilter f) {
    return f == RegimeFilter::P4 || f == RegimeFilter::U_a2_t2 || f == RegimeFilter::U_a1_t1;
}
inline bool wants_substitute(RegimeFilter f) {
    return f == RegimeFilter::P5 || f == RegimeFilter::U_a2_t1 || f == RegimeFilter::U_a1_t2;
}

} // namespace detail

// Draws one scenario biased toward the named regime. Returns nullopt when
// the draw lands outside a feasibility guard; callers rejection-sample.
// Thin-cap ratios are calibrated after an uncapped pre-solve so that the
// targeted branch is actually reachable.
inline std::optional<Scenario> generate_scenario(RegimeFilter f, Rng& rng) {
    const double t2 = rng.uniform(0.05, 0.25);
    const double T = rng.uniform(0.05, 0.20);
    const double t1 = t2 + T;

    // the binding shadow analysis is well-defined when the price ordering
    // opposes the dominating cross-effect; pair them per draw
    const bool shadow_variant = rng.coin();
    bool complement = detail::wants_complement(f);
    bool substitute = detail::wants_substitute(f);
    if (f == RegimeFilter::shadow_binding) {
        complement = !shadow_variant;
        substitute = shadow_variant;
    }

    double p1, p2;
    if (detail::wants_equal_prices(f)) {
        p1 = p2 = rng.uniform(2.5, 4.5);
    } else {
        const double lo = rng.uniform(2.0, 4.0);
        const double gap = rng.uniform(0.6, 1.8);
        bool p1_low = detail::wants_p1_le_p2(f) || f == RegimeFilter::P1 ||
                      f == RegimeFilter::shadow_slack;
        if (f == RegimeFilter::none) p1_low = rng.coin();
        if (f == RegimeFilter::shadow_binding) p1_low = shadow_variant;
        if (p1_low) {
            p1 = lo;
            p2 = lo + gap;
        } else {
            p2 = lo;
            p1 = lo + gap;
        }
    }
    const double r = rng.uniform(0.03, 0.10);

    // marginal-cost targets: inside the price sandwich (with margin) for
    // the proposition regimes, free otherwise
    const double plo = std::min(p1, p2), phi = std::max(p1, p2);
    const double margin = 0.25 * (phi - plo);
    double m[2];
    for (auto& mc : m)
        mc = detail::wants_equal_prices(f) ? rng.uniform(0.75 * p1, 1.25 * p1)
                                           : rng.uniform(plo + margin, phi - margin);

    double svals[2];
    std::optional<AffiliatePrimitives> built[2];
    for (int c = 0; c < 2; ++c) {
        const double a = m[c] + rng.uniform(2.0, 5.0);
        const double b = rng.uniform(0.8, 1.5);
        const double s = (a - m[c]) / b;
        const double c2_hi = std::min(0.6, 0.8 * m[c] / s);
        if (c2_hi <= 0.2) return std::nullopt;
        const double c2 = rng.uniform(0.2, c2_hi);
        const double c1 = m[c] - c2 * s;
        if (c1 <= 0.02) return std::nullopt;
        built[c] = AffiliatePrimitives{QuadraticRevenue(a, b),
                                       QuadraticCost(rng.uniform(0.0, 1.5), c1, c2),
                                       BankInterestSchedule(1.0, 0.01, 0.0)};
        svals[c] = s;
    }

    // bank schedules around the cost-of-funds targets B2' <= r <= B1'
    const double b1t = r * rng.uniform(1.08, 1.6);
    const double b2t = r * rng.uniform(0.55, 0.92);
    const double targets[2] = {b1t, b2t};
    for (int c = 0; c < 2; ++c) {
        const double d = rng.uniform(6.0, 12.0);
        const double beta2 = std::min(rng.uniform(0.0005, 0.002), 0.4 * targets[c] / d);
        const double beta1 = targets[c] - beta2 * d;
        if (beta1 <= 1e-4) return std::nullopt;
        built[c]->bank = BankInterestSchedule(d, beta1, beta2);
    }

    // concealment curvature: combined matrix Kbar, split across f and g
    double kd0 = rng.uniform(0.25, 0.8);
    double kd1 = detail::wants_equal_prices(f) ? kd0 : rng.uniform(0.25, 0.8);
    const double k12 = rng.uniform(0.0, 0.3) * std::min(kd0, kd1);
    const double cpp = (1 - t1) * built[0]->cost.c2() + (1 - t2) * built[1]->cost.c2();
    const double l11m = cpp / (p1 * p1) + kd0; // |L11|
    const double l22m = cpp / (p2 * p2) + kd1; // |L22|
    const double l12 = cpp / (p1 * p2) + k12;
    const double band_lo = l12 / l11m;
    const double band_hi = l22m / l12;
    const double ratio_mid = (l11m + l12) / (l22m + l12);

    double k13 = 0.0, k23 = 0.0;
    const double capc = 0.45 * std::min(kd0, kd1);
    if (f == RegimeFilter::neutral) {
        // no cross-effects
    } else if (f == RegimeFilter::cross_sym) {
        k13 = k23 = rng.uniform(0.05, std::min(capc, 0.25));
    } else {
        double rho_lo, rho_hi;
        if (complement) {
            rho_lo = ratio_mid * 1.1;
            rho_hi = std::min(band_hi, ratio_mid * 2.5);
        } else if (substitute) {
            rho_lo = std::max(band_lo, ratio_mid * 0.3);
            rho_hi = ratio_mid * 0.9;
        } else {
            rho_lo = std::max(band_lo, ratio_mid * 0.5);
            rho_hi = std::min(band_hi, ratio_mid * 2.0);
        }
        if (!(rho_lo < rho_hi)) return std::nullopt;
        const double rho = rng.uniform(rho_lo, rho_hi);
        k23 = rng.uniform(0.04, std::min(capc, 0.25));
        k13 = rho * k23;
        if (k13 > capc) return std::nullopt;
    }
    const double k33 = std::max(rng.uniform(0.35, 1.0), 1.3 * (k13 + k23) + 0.1);

    Mat3 kbar{{{kd0, k12, k13}, {k12, kd1, k23}, {k13, k23, k33}}};
    const double split = rng.uniform(0.3, 0.7);
    Mat3 kf{}, kg{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            kf[i][j] = split * kbar[i][j];
            kg[i][j] = (1.0 - split) * kbar[i][j];
        }

    // kappa gaps sized so the uncapped optimum is interior
    const double c1p0 = built[0]->cost.eval(svals[0]).d1;
    const double c2p0 = built[1]->cost.eval(svals[1]).d1;
    const double cn0 = (1 - t1) * c1p0 - (1 - t2) * c2p0;
    const double b1p0 = built[0]->bank.eval(built[0]->bank.baseline_debt()).d1;
    const double b2p0 = built[1]->bank.eval(built[1]->bank.baseline_debt()).d1;
    const double bn0 = (1 - t1) * b1p0 - (1 - t2) * b2p0;
    const Vec3 kgv{rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8)};
    const Vec3 kfv{kgv[0] + T + cn0 / p1 + rng.uniform(0.08, 0.35),
                   kgv[1] + T + cn0 / p2 - rng.uniform(0.08, 0.35),
                   kgv[2] + T + bn0 / r - rng.uniform(0.03, 0.15)};
    for (double v : kfv)
        if (v <= 0.05) return std::nullopt;

    Scenario sc{TaxRegime(t1, t2),
                p1,
                p2,
                r,
                svals[0],
                svals[1],
                FirmPrimitives{*built[0], *built[1], ConcealmentQuadratic(kfv, kf),
                               ConcealmentQuadratic(kgv, kg)},
                std::nullopt};

    if (detail::wants_unconstrained(f) || f == RegimeFilter::none) return sc;

    // calibrate the cap against the uncapped optimum
    Equilibrium uncapped;
    try {
        uncapped = solve(sc);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (uncapped.boundary() || uncapped.vars.y <= 1e-4) return std::nullopt;
    const double ebit = sc.primitives.aff1.revenue.eval(sc.s1).value -
                        sc.primitives.aff1.cost.eval(sc.s1).value;
    if (ebit <= 0.0) return std::nullopt;
    const double frac = detail::wants_binding(f) ? rng.uniform(0.3, 0.9) : rng.uniform(1.3, 3.0);
    const double theta = frac * uncapped.vars.y / ebit;
    if (theta <= 0.0 || theta > 1.0) return std::nullopt;
    sc.thin_cap = ThinCapRule(theta, 0.0);
    return sc;
}

} // namespace psm
