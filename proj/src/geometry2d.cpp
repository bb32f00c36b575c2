#include "dfit/geometry2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dfit/error.hpp"

namespace dfit {

CurveLoop::CurveLoop(std::vector<QuadraticBezier> curves) : curves_(std::move(curves)) {
    if (curves_.size() < 2) throw Error("curve loop needs at least 2 curves");
    for (std::size_t i = 0; i < curves_.size(); ++i) {
        const auto& cur = curves_[i];
        const auto& next = curves_[(i + 1) % curves_.size()];
        if (!(cur.c == next.a)) throw Error("curve loop is not closed at curve " + std::to_string(i));
        if (!(cur.thickness >= 0.0)) throw Error("negative curve thickness");
        for (double v : {cur.a.x, cur.a.y, cur.b.x, cur.b.y, cur.c.x, cur.c.y}) {
            if (!std::isfinite(v)) throw Error("non-finite control point");
        }
    }
}

CurveSet::CurveSet(std::vector<CurveLoop> loops) : loops_(std::move(loops)) {
    if (loops_.empty()) throw Error("curve set has no loops");
}

std::size_t CurveSet::curve_count() const {
    std::size_t n = 0;
    for (const auto& l : loops_) n += l.size();
    return n;
}

std::vector<QuadraticBezier> CurveSet::flatten() const {
    std::vector<QuadraticBezier> out;
    out.reserve(curve_count());
    for (const auto& l : loops_) out.insert(out.end(), l.curves().begin(), l.curves().end());
    return out;
}

int solve_cubic(double c3, double c2, double c1, double c0, double roots[3]) {
    const double a = c2 / c3;
    const double b = c1 / c3;
    const double c = c0 / c3;
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    const double q3 = q * q * q;
    const double shift = a / 3.0;
    if (r * r < q3) {
        const double theta = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
        const double m = -2.0 * std::sqrt(q);
        constexpr double third_turn = 2.0 * std::numbers::pi / 3.0;
        roots[0] = m * std::cos(theta / 3.0) - shift;
        roots[1] = m * std::cos(theta / 3.0 + third_turn) - shift;
        roots[2] = m * std::cos(theta / 3.0 - third_turn) - shift;
        return 3;
    }
    const double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    const double small = big == 0.0 ? 0.0 : q / big;
    roots[0] = big + small - shift;
    if (q > 0.0) {
        // Close to the double-root boundary the discriminant test can drop a
        // nearly coincident pair; keep its limit position as a candidate.
        roots[1] = std::copysign(std::sqrt(q), r) - shift;
        return 2;
    }
    return 1;
}

namespace {

double clamp01(double t) { return std::clamp(t, 0.0, 1.0); }

}  // namespace

ClosestPoint closest_point(const QuadraticBezier& curve, const Vec2& p) {
    const Vec2 A = curve.b - curve.a;
    const Vec2 B = curve.c - curve.b * 2.0 + curve.a;
    const Vec2 m = curve.a - p;

    const double bb = dot(B, B);
    const double scale2 = std::max(dot(A, A), squared_norm(curve.c - curve.a));

    ClosestPoint best{0.0, distance(curve.a, p)};
    const auto consider = [&](double t) {
        const double d = distance(curve.eval(t), p);
        if (d < best.distance) best = {t, d};
    };
    consider(1.0);

    if (scale2 == 0.0) return best;

    if (bb < 1e-12 * scale2) {
        // b sits (numerically) at the midpoint of a and c: the curve is the
        // segment a-c traversed at constant speed.
        const Vec2 ac = curve.c - curve.a;
        const double len2 = dot(ac, ac);
        if (len2 > 0.0) consider(clamp01(dot(p - curve.a, ac) / len2));
        return best;
    }

    const double c3 = bb;
    const double c2 = 3.0 * dot(A, B);
    const double c1 = 2.0 * dot(A, A) + dot(B, m);
    const double c0 = dot(A, m);

    double roots[3];
    const int n = solve_cubic(c3, c2, c1, c0, roots);
    for (int i = 0; i < n; ++i) {
        double t = clamp01(roots[i]);
        const double f = ((c3 * t + c2) * t + c1) * t + c0;
        const double df = (3.0 * c3 * t + 2.0 * c2) * t + c1;
        if (df != 0.0) t = clamp01(t - f / df);
        consider(t);
    }
    return best;
}

double lift_thickness(double distance, double thickness) { return std::max(distance - thickness, 0.0); }

double control_box_distance(const QuadraticBezier& curve, const Vec2& p) {
    const double lo_x = std::min({curve.a.x, curve.b.x, curve.c.x});
    const double hi_x = std::max({curve.a.x, curve.b.x, curve.c.x});
    const double lo_y = std::min({curve.a.y, curve.b.y, curve.c.y});
    const double hi_y = std::max({curve.a.y, curve.b.y, curve.c.y});
    const double dx = std::max({lo_x - p.x, 0.0, p.x - hi_x});
    const double dy = std::max({lo_y - p.y, 0.0, p.y - hi_y});
    return std::sqrt(dx * dx + dy * dy);
}

double curve_set_distance(std::span<const QuadraticBezier> curves, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
        if (control_box_distance(c, p) - c.thickness >= best) continue;
        best = std::min(best, lift_thickness(closest_point(c, p).distance, c.thickness));
    }
    return best;
}

double curve_set_distance(const CurveSet& shape, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& loop : shape.loops()) best = std::min(best, curve_set_distance(loop.curves(), p));
    return best;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? clamp01(dot(p - a, ab) / len2) : 0.0;
    return distance(a + ab * t, p);
}

}  // namespace dfit
