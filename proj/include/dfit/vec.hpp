#pragma once

#include <cmath>

namespace dfit {

// Small fixed-size vectors. The scalar is a template parameter so the same
// distance kernels run on plain doubles and on forward-mode duals.

template <class T>
struct Vec2T {
    T x{}, y{};

    constexpr Vec2T() = default;
    constexpr Vec2T(T x_, T y_) : x(x_), y(y_) {}

    constexpr Vec2T& operator+=(const Vec2T& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2T& operator-=(const Vec2T& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2T& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2T operator+(Vec2T a, const Vec2T& b) { return a += b; }
    friend constexpr Vec2T operator-(Vec2T a, const Vec2T& b) { return a -= b; }
    friend constexpr Vec2T operator-(const Vec2T& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2T operator*(Vec2T a, double s) { return a *= s; }
    friend constexpr Vec2T operator*(double s, Vec2T a) { return a *= s; }
    friend constexpr bool operator==(const Vec2T&, const Vec2T&) = default;
};

template <class T>
struct Vec3T {
    T x{}, y{}, z{};

    constexpr Vec3T() = default;
    constexpr Vec3T(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    constexpr T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3T& operator+=(const Vec3T& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3T& operator-=(const Vec3T& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3T& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3T operator+(Vec3T a, const Vec3T& b) { return a += b; }
    friend constexpr Vec3T operator-(Vec3T a, const Vec3T& b) { return a -= b; }
    friend constexpr Vec3T operator-(const Vec3T& a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3T operator*(Vec3T a, double s) { return a *= s; }
    friend constexpr Vec3T operator*(double s, Vec3T a) { return a *= s; }
    friend constexpr bool operator==(const Vec3T&, const Vec3T&) = default;
};

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;

template <class T>
constexpr T dot(const Vec2T<T>& a, const Vec2T<T>& b) { return a.x * b.x + a.y * b.y; }
template <class T>
constexpr T dot(const Vec3T<T>& a, const Vec3T<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <class T>
constexpr T squared_norm(const Vec2T<T>& a) { return dot(a, a); }
template <class T>
constexpr T squared_norm(const Vec3T<T>& a) { return dot(a, a); }

inline double norm(const Vec2& a) { return std::sqrt(squared_norm(a)); }
inline double norm(const Vec3& a) { return std::sqrt(squared_norm(a)); }

inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr Vec2 lerp(const Vec2& a, const Vec2& b, double t) { return a + (b - a) * t; }

}  // namespace dfit
