#pragma once

#include <array>
#include <cmath>

#include "orblab/common.hpp"

namespace orblab {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Dense NxN matrix, row-major. Only N in {2,3} are exercised.
template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

template <std::size_t N>
inline Vec<N> operator+(const Vec<N>& a, const Vec<N>& b) {
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
    return r;
}

template <std::size_t N>
inline Vec<N> operator-(const Vec<N>& a, const Vec<N>& b) {
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
    return r;
}

template <std::size_t N>
inline Vec<N> operator*(double s, const Vec<N>& a) {
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
    return r;
}

template <std::size_t N>
inline double dot(const Vec<N>& a, const Vec<N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
inline double norm(const Vec<N>& a) { return std::sqrt(dot(a, a)); }

template <std::size_t N>
inline Vec<N> mat_vec(const Mat<N>& m, const Vec<N>& v) {
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += m[i][j] * v[j];
        r[i] = s;
    }
    return r;
}

template <std::size_t N>
inline Mat<N> mat_mul(const Mat<N>& a, const Mat<N>& b) {
    Mat<N> r{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < N; ++k) s += a[i][k] * b[k][j];
            r[i][j] = s;
        }
    return r;
}

template <std::size_t N>
inline Mat<N> transpose(const Mat<N>& a) {
    Mat<N> r{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) r[i][j] = a[j][i];
    return r;
}

template <std::size_t N>
inline Mat<N> identity() {
    Mat<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i][i] = 1.0;
    return r;
}

inline double det(const Mat<2>& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

inline double det(const Mat<3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
         - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
         + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat<2> inverse(const Mat<2>& m) {
    const double d = det(m);
    if (std::abs(d) < 1e-14) throw Error("singular 2x2 matrix");
    return Mat<2>{{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
}

inline Mat<3> inverse(const Mat<3>& m) {
    const double d = det(m);
    if (std::abs(d) < 1e-14) throw Error("singular 3x3 matrix");
    Mat<3> r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
    return r;
}

template <std::size_t N>
inline bool mat_near(const Mat<N>& a, const Mat<N>& b, double tol) {
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (std::abs(a[i][j] - b[i][j]) > tol) return false;
    return true;
}

} // namespace orblab
