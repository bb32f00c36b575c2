#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dfit/dual.hpp"
#include "dfit/vec.hpp"

namespace dfit {

/// Scalar-first quaternion (w, x, y, z) with the Hamilton product.
template <class T>
struct QuatT {
    T w{1.0}, x{}, y{}, z{};

    friend QuatT operator*(const QuatT& p, const QuatT& q) {
        return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
                p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
                p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
                p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
    }
    QuatT conjugate() const { return {w, -x, -y, -z}; }
};

using Quaternion = QuatT<double>;

/// q v q^-1 for unit q.
template <class T, class V>
Vec3T<T> rotate(const QuatT<T>& q, const Vec3T<V>& v) {
    const QuatT<T> pv{T(0.0), T(v.x), T(v.y), T(v.z)};
    const QuatT<T> r = q * pv * q.conjugate();
    return {r.x, r.y, r.z};
}

/// q^-1 v q for unit q: the rotation taking world offsets into the local frame.
template <class T, class V>
Vec3T<T> rotate_inverse(const QuatT<T>& q, const Vec3T<V>& v) {
    const QuatT<T> pv{T(0.0), T(v.x), T(v.y), T(v.z)};
    const QuatT<T> r = q.conjugate() * pv * q;
    return {r.x, r.y, r.z};
}

Quaternion normalized(const Quaternion& q);
Quaternion axis_angle(const Vec3& axis, double angle);

/// Oriented box: half extents, then rotation, then translation.
class Cuboid {
public:
    Cuboid(const Vec3& half_extents, const Vec3& translation, const Quaternion& rotation);

    const Vec3& half_extents() const { return half_extents_; }
    const Vec3& translation() const { return translation_; }
    const Quaternion& rotation() const { return rotation_; }

private:
    Vec3 half_extents_;
    Vec3 translation_;
    Quaternion rotation_;
};

struct RoundedCuboid {
    Cuboid cuboid;
    double radius = 0.0;

    RoundedCuboid(const Cuboid& c, double r);
};

/// Union of the positive parts minus the union of the negative parts.
struct CsgShape {
    std::vector<RoundedCuboid> positive;
    std::vector<RoundedCuboid> negative;

    CsgShape(std::vector<RoundedCuboid> pos, std::vector<RoundedCuboid> neg);
};

/// Box signed distance in the box frame: |max(d,0)| + min(max_i d_i, 0) with
/// d = |p| - b. Generic over the scalar so the fitter can differentiate it.
template <class T>
T box_sdf_local(const Vec3T<T>& half_extents, const Vec3T<T>& local) {
    using std::abs;
    using std::max;
    using std::min;
    using std::sqrt;
    const T dx = abs(local.x) - half_extents.x;
    const T dy = abs(local.y) - half_extents.y;
    const T dz = abs(local.z) - half_extents.z;
    const T ox = max(dx, T(0.0));
    const T oy = max(dy, T(0.0));
    const T oz = max(dz, T(0.0));
    const T inside = min(max(dx, max(dy, dz)), T(0.0));
    const T outside2 = ox * ox + oy * oy + oz * oz;
    if (value_of(outside2) > 0.0) return sqrt(outside2) + inside;
    return inside;
}

/// Signed distance of an oriented box. q must be unit length.
template <class T>
T cuboid_sdf_generic(const Vec3T<T>& half_extents, const Vec3T<T>& translation, const QuatT<T>& q,
                     const Vec3& p) {
    const Vec3T<T> offset{T(p.x) - translation.x, T(p.y) - translation.y, T(p.z) - translation.z};
    return box_sdf_local(half_extents, rotate_inverse(q, offset));
}

double cuboid_sdf(const Cuboid& c, const Vec3& p);
double rounded_cuboid_sdf(const RoundedCuboid& rc, const Vec3& p);
double csg_sdf(const CsgShape& s, const Vec3& p);

/// Lower bound of the rounded cuboid's signed distance at p (bounding sphere).
double rounded_cuboid_lower_bound(const RoundedCuboid& rc, const Vec3& p);

/// Union of cuboids (no CSG subtraction) as used by plain abstraction fits.
double union_sdf(const std::vector<RoundedCuboid>& parts, const Vec3& p);

}  // namespace dfit
