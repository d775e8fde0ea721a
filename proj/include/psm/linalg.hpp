#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>

namespace psm {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

namespace linalg {

// Gaussian elimination with partial pivoting on an N x N system.
// Returns the solution and writes the determinant (product of pivots,
// sign-corrected); returns nullopt when a pivot falls below `pivot_tol`
// times the largest row magnitude.
template <std::size_t N>
std::optional<std::array<double, N>> solve(std::array<std::array<double, N>, N> a,
                                           std::array<double, N> b,
                                           double* det_out = nullptr,
                                           double pivot_tol = 1e-13) {
    double det = 1.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) scale = std::max(scale, std::fabs(a[i][j]));
    if (scale == 0.0) {
        if (det_out) *det_out = 0.0;
        return std::nullopt;
    }
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            std::swap(b[piv], b[col]);
            det = -det;
        }
        const double p = a[col][col];
        if (std::fabs(p) <= pivot_tol * scale) {
            if (det_out) *det_out = 0.0;
            return std::nullopt;
        }
        det *= p;
        for (std::size_t r = col + 1; r < N; ++r) {
            const double m = a[r][col] / p;
            if (m == 0.0) continue;
            for (std::size_t c = col; c < N; ++c) a[r][c] -= m * a[col][c];
            b[r] -= m * b[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t i = N; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < N; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    if (det_out) *det_out = det;
    return x;
}

template <std::size_t N>
double determinant(std::array<std::array<double, N>, N> a) {
    double det = 1.0;
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        const double p = a[col][col];
        if (p == 0.0) return 0.0;
        det *= p;
        for (std::size_t r = col + 1; r < N; ++r) {
            const double m = a[r][col] / p;
            for (std::size_t c = col; c < N; ++c) a[r][c] -= m * a[col][c];
        }
    }
    return det;
}

template <std::size_t N>
std::array<double, N> matvec(const std::array<std::array<double, N>, N>& a,
                             const std::array<double, N>& x) {
    std::array<double, N> y{};
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += a[i][j] * x[j];
        y[i] = s;
    }
    return y;
}

template <std::size_t N>
double inf_norm(const std::array<double, N>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

} // namespace linalg
} // namespace psm
