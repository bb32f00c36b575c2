#include <doctest.h>

#include <cmath>
#include <random>

#include "dfit/error.hpp"
#include "dfit/geometry2d.hpp"

using namespace dfit;

namespace {

// Dense parameter scan used as an independent reference.
double scan_distance(const QuadraticBezier& c, const Vec2& p, int n) {
    double best = 1e300;
    for (int i = 0; i <= n; ++i) best = std::min(best, distance(c.eval(static_cast<double>(i) / n), p));
    return best;
}

}  // namespace

TEST_CASE("closest point matches high-precision references") {
    // Values computed with 50-digit arithmetic (dense scan then root polish).
    const QuadraticBezier arch{{0, 0}, {1, 2}, {2, 0}};
    {
        const auto cp = closest_point(arch, {1, 0.5});
        CHECK(cp.distance == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(cp.t == doctest::Approx(0.5).epsilon(1e-3));  // quartic minimum, flat in t
    }
    {
        const auto cp = closest_point(arch, {0.3, 1.2});
        CHECK(cp.t == doctest::Approx(0.29747069361167808445).epsilon(1e-12));
        CHECK(cp.distance == doctest::Approx(0.46855009597021888077).epsilon(1e-13));
    }
    {
        const auto cp = closest_point(arch, {1.7, 0.1});
        CHECK(cp.t == doctest::Approx(0.94526065734834239156).epsilon(1e-12));
        CHECK(cp.distance == doctest::Approx(0.21849790570354721794).epsilon(1e-13));
    }
    {
        const QuadraticBezier c{{0.1, 0.2}, {0.9, -0.4}, {0.3, 0.8}};
        const auto cp = closest_point(c, {0.45, 0.25});
        CHECK(cp.t == doctest::Approx(0.72256335104906325633).epsilon(1e-12));
        CHECK(cp.distance == doctest::Approx(0.078517416047006797351).epsilon(1e-12));
    }
}

TEST_CASE("closest point edge cases") {
    const QuadraticBezier arch{{0, 0}, {1, 2}, {2, 0}};
    SUBCASE("apex above") {
        const auto cp = closest_point(arch, {1, 3});
        CHECK(cp.t == doctest::Approx(0.5));
        CHECK(cp.distance == doctest::Approx(2.0));
    }
    SUBCASE("endpoint region") {
        const auto cp = closest_point(arch, {3, -1});
        CHECK(cp.t == 1.0);
        CHECK(cp.distance == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("straight curve behaves like a segment") {
        const QuadraticBezier line{{0, 0}, {0.5, 0.5}, {1, 1}};
        const auto cp = closest_point(line, {0.2, 0.8});
        CHECK(cp.distance == doctest::Approx(0.42426406871192853819).epsilon(1e-13));
        CHECK(cp.distance == doctest::Approx(segment_distance({0.2, 0.8}, {0, 0}, {1, 1})).epsilon(1e-13));
    }
    SUBCASE("point on the curve") {
        for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) CHECK(closest_point(arch, arch.eval(t)).distance < 1e-12);
    }
    SUBCASE("degenerate curve collapses to a point") {
        const QuadraticBezier dot{{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
        CHECK(closest_point(dot, {0.6, 0.7}).distance == doctest::Approx(0.5));
    }
}

TEST_CASE("closest point never loses to a dense scan") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const QuadraticBezier c{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
        const Vec2 p{u(rng), u(rng)};
        const auto cp = closest_point(c, p);
        CHECK(cp.t >= 0.0);
        CHECK(cp.t <= 1.0);
        CHECK(cp.distance == doctest::Approx(distance(c.eval(cp.t), p)).epsilon(1e-12));
        CHECK(cp.distance <= scan_distance(c, p, 20000) + 1e-12);
        CHECK(cp.distance >= scan_distance(c, p, 20000) - 1e-5);
    }
}

TEST_CASE("cubic solver") {
    double r[3];
    SUBCASE("three distinct roots") {
        // (t - 1)(t - 2)(t + 3) = t^3 - 7t + 6
        REQUIRE(solve_cubic(1, 0, -7, 6, r) == 3);
        std::sort(r, r + 3);
        CHECK(r[0] == doctest::Approx(-3.0));
        CHECK(r[1] == doctest::Approx(1.0));
        CHECK(r[2] == doctest::Approx(2.0));
    }
    SUBCASE("single real root") {
        const int n = solve_cubic(2, 0, 2, -4, r);  // 2(t^3 + t - 2), root 1
        bool found = false;
        for (int i = 0; i < n; ++i) found = found || std::abs(r[i] - 1.0) < 1e-12;
        CHECK(found);
    }
    SUBCASE("roots satisfy the polynomial") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        for (int i = 0; i < 1000; ++i) {
            const double c3 = u(rng) + (u(rng) > 0 ? 6.0 : -6.0), c2 = u(rng), c1 = u(rng), c0 = u(rng);
            const int n = solve_cubic(c3, c2, c1, c0, r);
            REQUIRE(n >= 1);
            REQUIRE(n <= 3);
            // the first root is always a true root
            const double f = ((c3 * r[0] + c2) * r[0] + c1) * r[0] + c0;
            CHECK(std::abs(f) < 1e-8 * (1.0 + std::abs(c3) * std::pow(std::abs(r[0]) + 1.0, 3)));
        }
    }
}

TEST_CASE("thickness lift and curve sets") {
    CHECK(lift_thickness(0.3, 0.1) == doctest::Approx(0.2));
    CHECK(lift_thickness(0.05, 0.1) == 0.0);
    CHECK(lift_thickness(0.3, 0.0) == 0.3);

    const QuadraticBezier c1{{0, 0}, {0.5, 0}, {1, 0}};
    const QuadraticBezier c2{{1, 0}, {0.5, 1}, {0, 0}, 0.1};
    const CurveSet shape({CurveLoop({c1, c2})});
    CHECK(shape.curve_count() == 2);
    const Vec2 p{0.5, -0.25};
    CHECK(curve_set_distance(shape, p) == doctest::Approx(0.25));
    const Vec2 q{0.5, 0.9};
    CHECK(curve_set_distance(shape, q) ==
          doctest::Approx(std::max(closest_point(c2, q).distance - 0.1, 0.0)));
}

TEST_CASE("loops must be closed") {
    const QuadraticBezier c1{{0, 0}, {0.5, 0}, {1, 0}};
    const QuadraticBezier c2{{1, 0}, {0.5, 1}, {0, 0}};
    const QuadraticBezier open{{1, 0.001}, {0.5, 1}, {0, 0}};
    CHECK_NOTHROW(CurveLoop({c1, c2}));
    CHECK_THROWS_AS(CurveLoop({c1, open}), Error);
    CHECK_THROWS_AS(CurveLoop({c1}), Error);
}

TEST_CASE("control box distance is a lower bound") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int i = 0; i < 2000; ++i) {
        const QuadraticBezier c{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
        const Vec2 p{u(rng), u(rng)};
        CHECK(control_box_distance(c, p) <= closest_point(c, p).distance + 1e-12);
    }
}

TEST_CASE("distance is invariant under rigid motion") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const QuadraticBezier c{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
        const Vec2 p{u(rng), u(rng)};
        const double th = 3.0 * u(rng);
        const Vec2 t{u(rng), u(rng)};
        const auto m = [&](const Vec2& v) {
            return Vec2{std::cos(th) * v.x - std::sin(th) * v.y + t.x, std::sin(th) * v.x + std::cos(th) * v.y + t.y};
        };
        const QuadraticBezier mc{m(c.a), m(c.b), m(c.c)};
        CHECK(closest_point(mc, m(p)).distance == doctest::Approx(closest_point(c, p).distance).epsilon(1e-9));
    }
}
