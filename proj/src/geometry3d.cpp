#include "dfit/geometry3d.hpp"

#include <limits>

#include "dfit/error.hpp"

namespace dfit {

Quaternion normalized(const Quaternion& q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (!(n > 0.0) || !std::isfinite(n)) throw Error("quaternion cannot be normalized");
    // Already unit up to rounding: keep the bits so stored rotations reload exactly.
    if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return q;
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quaternion axis_angle(const Vec3& axis, double angle) {
    const double n = norm(axis);
    if (!(n > 0.0)) throw Error("rotation axis has zero length");
    const double s = std::sin(0.5 * angle) / n;
    return {std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s};
}

Cuboid::Cuboid(const Vec3& half_extents, const Vec3& translation, const Quaternion& rotation)
    : half_extents_(half_extents), translation_(translation), rotation_(normalized(rotation)) {
    if (!(half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0)) {
        throw Error("cuboid half extents must be positive");
    }
    if (!std::isfinite(half_extents.x + half_extents.y + half_extents.z) ||
        !std::isfinite(translation.x + translation.y + translation.z)) {
        throw Error("non-finite cuboid parameters");
    }
}

RoundedCuboid::RoundedCuboid(const Cuboid& c, double r) : cuboid(c), radius(r) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error("rounding radius must be nonnegative");
}

CsgShape::CsgShape(std::vector<RoundedCuboid> pos, std::vector<RoundedCuboid> neg)
    : positive(std::move(pos)), negative(std::move(neg)) {
    if (positive.empty()) throw Error("CSG shape needs at least one positive part");
}

double cuboid_sdf(const Cuboid& c, const Vec3& p) {
    return cuboid_sdf_generic(c.half_extents(), c.translation(), c.rotation(), p);
}

double rounded_cuboid_sdf(const RoundedCuboid& rc, const Vec3& p) { return cuboid_sdf(rc.cuboid, p) - rc.radius; }

double rounded_cuboid_lower_bound(const RoundedCuboid& rc, const Vec3& p) {
    return distance(p, rc.cuboid.translation()) - norm(rc.cuboid.half_extents()) - rc.radius;
}

double union_sdf(const std::vector<RoundedCuboid>& parts, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& part : parts) {
        if (rounded_cuboid_lower_bound(part, p) >= best) continue;
        best = std::min(best, rounded_cuboid_sdf(part, p));
    }
    return best;
}

double csg_sdf(const CsgShape& s, const Vec3& p) {
    double result = union_sdf(s.positive, p);
    for (const auto& part : s.negative) result = std::max(result, -rounded_cuboid_sdf(part, p));
    return result;
}

}  // namespace dfit
