#pragma once

#include <array>
#include <cmath>

namespace dfit {

/// Forward-mode dual number carrying N partial derivatives.
///
/// Only the operations used by the primitive distance kernels are defined.
/// Non-smooth functions (abs, min, max) pick the derivative of the selected
/// branch, i.e. a one-sided subgradient at the kink.
template <int N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

    static Dual variable(double value, int index) {
        Dual r(value);
        r.d[index] = 1.0;
        return r;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator*=(double s) {
        v *= s;
        for (auto& x : d) x *= s;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        const double inv = 1.0 / o.v;
        for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
        v *= inv;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator*(Dual a, double s) { return a *= s; }
    friend Dual operator*(double s, Dual a) { return a *= s; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
    friend Dual operator-(Dual a) {
        a.v = -a.v;
        for (auto& x : a.d) x = -x;
        return a;
    }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }

    friend Dual sqrt(const Dual& a) {
        Dual r;
        r.v = std::sqrt(a.v);
        const double g = r.v > 0.0 ? 0.5 / r.v : 0.0;
        for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * g;
        return r;
    }
    friend Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }
    friend Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }
    friend Dual min(const Dual& a, const Dual& b) { return a.v <= b.v ? a : b; }
};

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual<N>& x) { return x.v; }

}  // namespace dfit
