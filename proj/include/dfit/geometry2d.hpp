#pragma once

#include <span>
#include <vector>

#include "dfit/vec.hpp"

namespace dfit {

/// Quadratic Bezier curve g(t) = (1-t)^2 a + 2(1-t)t b + t^2 c, t in [0,1],
/// with a stroke half-width used when lifting its distance field.
struct QuadraticBezier {
    Vec2 a, b, c;
    double thickness = 0.0;

    Vec2 eval(double t) const {
        const double u = 1.0 - t;
        return a * (u * u) + b * (2.0 * u * t) + c * (t * t);
    }
    Vec2 derivative(double t) const { return (b - a) * (2.0 * (1.0 - t)) + (c - b) * (2.0 * t); }

    friend bool operator==(const QuadraticBezier&, const QuadraticBezier&) = default;
};

/// Closed chain of curves: curve i ends exactly where curve i+1 starts.
class CurveLoop {
public:
    explicit CurveLoop(std::vector<QuadraticBezier> curves);

    const std::vector<QuadraticBezier>& curves() const { return curves_; }
    std::size_t size() const { return curves_.size(); }

    friend bool operator==(const CurveLoop&, const CurveLoop&) = default;

private:
    std::vector<QuadraticBezier> curves_;
};

/// Union of closed loops; the 2D shape parameters being fitted.
class CurveSet {
public:
    explicit CurveSet(std::vector<CurveLoop> loops);

    const std::vector<CurveLoop>& loops() const { return loops_; }
    std::size_t curve_count() const;
    /// All curves, loop by loop.
    std::vector<QuadraticBezier> flatten() const;

    friend bool operator==(const CurveSet&, const CurveSet&) = default;

private:
    std::vector<CurveLoop> loops_;
};

struct ClosestPoint {
    double t = 0.0;
    double distance = 0.0;
};

/// Global closest point on the curve to `p`. Solves the cubic stationarity
/// condition in closed form and compares interior roots against both
/// endpoints. Thickness is ignored here.
ClosestPoint closest_point(const QuadraticBezier& curve, const Vec2& p);

/// Unsigned distance with the stroke offset applied: max(d - s, 0).
double lift_thickness(double distance, double thickness);

/// min over curves of the thickness-lifted distance.
double curve_set_distance(const CurveSet& shape, const Vec2& p);
double curve_set_distance(std::span<const QuadraticBezier> curves, const Vec2& p);

/// Euclidean distance from p to segment [a, b].
double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Lower bound on the distance from p to any point of the curve, from the
/// axis-aligned box around its control points.
double control_box_distance(const QuadraticBezier& curve, const Vec2& p);

/// Real roots of c3 t^3 + c2 t^2 + c1 t + c0 with c3 != 0. Returns the count
/// written into `roots` (1 to 3).
int solve_cubic(double c3, double c2, double c1, double c0, double roots[3]);

}  // namespace dfit
