#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "psm/errors.hpp"
#include "psm/linalg.hpp"

namespace psm {

// Value of a form together with its first and second derivative at a point.
struct Deriv {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// Revenue R(s) = a*s - b*s^2/2 with marginal revenue R'(s) = a - b*s.
// Valid where s >= 0 and R' > 0.
class QuadraticRevenue {
  public:
    QuadraticRevenue(double a, double b) : a_(a), b_(b) {
        if (!(a > 0.0)) throw ValidationError("revenue.a", "a > 0 required");
        if (!(b > 0.0)) throw ValidationError("revenue.b", "b > 0 required");
    }

    Deriv eval(double s) const {
        if (!(s >= 0.0))
            throw OutOfValidityRegion("QuadraticRevenue", s, "market sales must be nonnegative");
        const double d1 = a_ - b_ * s;
        if (!(d1 > 0.0))
            throw OutOfValidityRegion("QuadraticRevenue", s, "marginal revenue R' <= 0");
        return {a_ * s - 0.5 * b_ * s * s, d1, -b_};
    }

    double a() const { return a_; }
    double b() const { return b_; }
    // Upper end of the validity region (exclusive).
    double max_sales() const { return a_ / b_; }

  private:
    double a_, b_;
};

// Total cost C(u) = c0 + c1*u + c2*u^2/2, valid where C'(u) = c1 + c2*u > 0.
class QuadraticCost {
  public:
    QuadraticCost(double c0, double c1, double c2) : c0_(c0), c1_(c1), c2_(c2) {
        if (!(c0 >= 0.0)) throw ValidationError("cost.c0", "c0 >= 0 required");
        if (!(c1 > 0.0)) throw ValidationError("cost.c1", "c1 > 0 required");
        if (!(c2 > 0.0)) throw ValidationError("cost.c2", "c2 > 0 required");
    }

    Deriv eval(double u) const {
        const double d1 = c1_ + c2_ * u;
        if (!(d1 > 0.0))
            throw OutOfValidityRegion("QuadraticCost", u, "marginal cost C' <= 0");
        return {c0_ + c1_ * u + 0.5 * c2_ * u * u, d1, c2_};
    }

    double c0() const { return c0_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }

  private:
    double c0_, c1_, c2_;
};

// Bank interest B(d) = beta1*d + beta2*d^2/2 on net bank debt d.
// Affiliate 1 carries d = D1 - b, affiliate 2 carries d = D2 + b, so the
// argument may drop below the baseline; validity only requires B'(d) > 0.
class BankInterestSchedule {
  public:
    BankInterestSchedule(double baseline_debt, double beta1, double beta2)
        : debt_(baseline_debt), beta1_(beta1), beta2_(beta2) {
        if (!(baseline_debt >= 0.0)) throw ValidationError("bank.baseline_debt", "D >= 0 required");
        if (!(beta1 > 0.0)) throw ValidationError("bank.beta1", "beta1 > 0 required");
        if (!(beta2 >= 0.0)) throw ValidationError("bank.beta2", "beta2 >= 0 required");
    }

    Deriv eval(double d) const {
        const double d1 = beta1_ + beta2_ * d;
        if (!(d1 > 0.0))
            throw OutOfValidityRegion("BankInterestSchedule", d, "marginal interest B' <= 0");
        return {beta1_ * d + 0.5 * beta2_ * d * d, d1, beta2_};
    }

    double baseline_debt() const { return debt_; }
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }

  private:
    double debt_, beta1_, beta2_;
};

// Uniform derivative access for the scalar quadratic families.
inline Deriv eval_with_derivatives(const QuadraticRevenue& f, double s) { return f.eval(s); }
inline Deriv eval_with_derivatives(const QuadraticCost& f, double u) { return f.eval(u); }
inline Deriv eval_with_derivatives(const BankInterestSchedule& f, double d) { return f.eval(d); }

// Which concealment cost a signed-argument vector feeds.
enum class Orientation { f, g };

inline Vec3 orientation_signs(Orientation o) {
    return o == Orientation::f ? Vec3{-1.0, 1.0, 1.0} : Vec3{1.0, -1.0, -1.0};
}

inline const char* orientation_name(Orientation o) { return o == Orientation::f ? "f" : "g"; }

// Concealment cost kappa.v + v'Kv/2 over the signed argument vector
// v = (-x1, x2, y) for f and (x1, -x2, -y) for g. K must be symmetric PSD
// with nonnegative off-diagonal entries; the gradient kappa + Kv must be
// strictly positive wherever the cost is evaluated, otherwise the model's
// sign system breaks down and evaluation refuses the point.
class ConcealmentQuadratic {
  public:
    ConcealmentQuadratic(const Vec3& kappa, const Mat3& k) : kappa_(kappa), k_(k) {
        for (int i = 0; i < 3; ++i)
            if (!(kappa[i] > 0.0))
                throw ValidationError("concealment.kappa[" + std::to_string(i) + "]",
                                      "kappa > 0 required");
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                if (std::fabs(k[i][j] - k[j][i]) > 1e-12)
                    throw ValidationError("concealment.K", "K must be symmetric");
                if (k[i][j] < 0.0)
                    throw ValidationError("concealment.K", "off-diagonal entries must be >= 0");
            }
        // PSD via leading principal minors, determinant tolerance 1e-12.
        const double m1 = k[0][0];
        const double m2 = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        const double m3 = linalg::determinant<3>(k);
        if (m1 < -1e-12 || m2 < -1e-12 || m3 < -1e-12)
            throw ValidationError("concealment.K", "K must be positive semidefinite");
    }

    double value(const Vec3& v) const {
        return linalg::dot3(kappa_, v) + 0.5 * linalg::dot3(v, linalg::matvec<3>(k_, v));
    }

    // kappa + Kv; strictly positive on the admissible region.
    Vec3 grad_v(const Vec3& v) const {
        const Vec3 kv = linalg::matvec<3>(k_, v);
        return {kappa_[0] + kv[0], kappa_[1] + kv[1], kappa_[2] + kv[2]};
    }

    bool gradient_positive(const Vec3& v) const {
        const Vec3 g = grad_v(v);
        return g[0] > 0.0 && g[1] > 0.0 && g[2] > 0.0;
    }

    const Vec3& kappa() const { return kappa_; }
    const Mat3& K() const { return k_; }

  private:
    Vec3 kappa_;
    Mat3 k_;
};

inline Vec3 signed_argument(Orientation o, double x1, double x2, double y) {
    return o == Orientation::f ? Vec3{-x1, x2, y} : Vec3{x1, -x2, -y};
}

inline double concealment_value(const ConcealmentQuadratic& spec, Orientation o, double x1,
                                double x2, double y) {
    return spec.value(signed_argument(o, x1, x2, y));
}

// Gradient with respect to (x1, x2, y). For f the result is (-f1, f2, fy)
// with f1, f2, fy > 0; for g it is (g1, -g2, -gy).
inline Vec3 concealment_gradient(const ConcealmentQuadratic& spec, Orientation o, double x1,
                                 double x2, double y) {
    const Vec3 v = signed_argument(o, x1, x2, y);
    const Vec3 gv = spec.grad_v(v);
    for (int i = 0; i < 3; ++i)
        if (!(gv[i] > 0.0))
            throw MonotonicityViolation(std::string("concealment cost ") + orientation_name(o) +
                                        ": gradient component " + std::to_string(i) +
                                        " nonpositive (" + std::to_string(gv[i]) + ")");
    const Vec3 s = orientation_signs(o);
    return {s[0] * gv[0], s[1] * gv[1], s[2] * gv[2]};
}

// Hessian with respect to (x1, x2, y): S K S with S = diag(-1,1,1) for f
// and diag(1,-1,-1) for g. Both orientations produce the same sign flip.
inline Mat3 concealment_hessian(const ConcealmentQuadratic& spec, Orientation o) {
    const Vec3 s = orientation_signs(o);
    Mat3 h{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) h[i][j] = s[i] * spec.K()[i][j] * s[j];
    return h;
}

// Earnings-stripping cap: ybar = theta * max(floor, uncontrolled EBIT).
struct ThinCapRule {
    ThinCapRule(double theta_, double floor_ = 0.0) : theta(theta_), floor(floor_) {
        if (!(theta >= 0.0 && theta <= 1.0))
            throw ValidationError("thin_cap.theta", "theta in [0,1] required");
        if (!(floor >= 0.0)) throw ValidationError("thin_cap.floor", "floor >= 0 required");
    }
    double theta;
    double floor;
};

// Cap on deductible internal interest, computed from uncontrolled market
// transactions only: EBIT1 = R1(s1) - C1(s1).
inline double thin_cap_limit(const ThinCapRule& rule, const QuadraticRevenue& r1,
                             const QuadraticCost& c1, double s1) {
    const double ebit = r1.eval(s1).value - c1.eval(s1).value;
    return rule.theta * std::max(rule.floor, ebit);
}

} // namespace psm
