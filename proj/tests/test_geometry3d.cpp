#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dfit/error.hpp"
#include "dfit/geometry3d.hpp"

using namespace dfit;

namespace {

const Quaternion kIdentity{1, 0, 0, 0};

Quaternion random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return normalized({n(rng), n(rng), n(rng), n(rng)});
}

}  // namespace

TEST_CASE("cuboid sdf examples") {
    const Cuboid unit({1, 1, 1}, {0, 0, 0}, kIdentity);
    CHECK(cuboid_sdf(unit, {0, 0, 0}) == -1.0);
    CHECK(cuboid_sdf(unit, {3, 0, 0}) == 2.0);
    CHECK(cuboid_sdf(unit, {2, 2, 1}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(cuboid_sdf(unit, {0.5, 0.2, -0.1}) == doctest::Approx(-0.5));

    const Cuboid slab({0.5, 0.3, 0.2}, {0, 0, 0}, kIdentity);
    CHECK(cuboid_sdf(slab, {1, 1, 0}) == doctest::Approx(std::sqrt(0.25 + 0.49)));
    const Cuboid turned({0.5, 0.3, 0.2}, {0, 0, 0}, axis_angle({0, 0, 1}, std::numbers::pi / 2));
    CHECK(cuboid_sdf(turned, {0, 1, 0}) == doctest::Approx(0.5));
    CHECK(cuboid_sdf(turned, {1, 0, 0}) == doctest::Approx(0.7));
    const Cuboid moved({1, 1, 1}, {5, 0, 0}, kIdentity);
    CHECK(cuboid_sdf(moved, {5, 0, 0}) == -1.0);
}

TEST_CASE("cuboid construction checks") {
    CHECK_THROWS_AS(Cuboid({0, 1, 1}, {0, 0, 0}, kIdentity), Error);
    CHECK_THROWS_AS(Cuboid({1, 1, 1}, {0, 0, 0}, {0, 0, 0, 0}), Error);
    CHECK_THROWS_AS(RoundedCuboid(Cuboid({1, 1, 1}, {0, 0, 0}, kIdentity), -0.1), Error);
    const Cuboid c({1, 1, 1}, {0, 0, 0}, {2, 0, 0, 0});
    CHECK(c.rotation().w == 1.0);
}

TEST_CASE("rounded cuboid sdf") {
    const Cuboid unit({1, 1, 1}, {0, 0, 0}, kIdentity);
    CHECK(rounded_cuboid_sdf(RoundedCuboid(unit, 0.5), {3, 0, 0}) == doctest::Approx(1.5));
    SUBCASE("zero radius equals the plain cuboid") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-3, 3);
        const Cuboid c({0.4, 0.9, 0.2}, {0.1, -0.3, 0.5}, random_rotation(rng));
        for (int i = 0; i < 200; ++i) {
            const Vec3 p{u(rng), u(rng), u(rng)};
            CHECK(rounded_cuboid_sdf(RoundedCuboid(c, 0.0), p) == cuboid_sdf(c, p));
        }
    }
    SUBCASE("sphere limit") {
        const Cuboid tiny({1e-6, 1e-6, 1e-6}, {0, 0, 0}, kIdentity);
        CHECK(rounded_cuboid_sdf(RoundedCuboid(tiny, 1.0), {2, 0, 0}) == doctest::Approx(1.0).epsilon(1e-5));
    }
    SUBCASE("zero level set sits r outside the box along the axes") {
        const Cuboid c({0.5, 0.3, 0.2}, {0, 0, 0}, kIdentity);
        const RoundedCuboid rc(c, 0.25);
        CHECK(rounded_cuboid_sdf(rc, {0.75, 0, 0}) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(rounded_cuboid_sdf(rc, {0, -0.55, 0}) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(rounded_cuboid_sdf(rc, {0, 0, 0.45}) == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("csg sdf") {
    const Cuboid a({1, 1, 1}, {0, 0, 0}, kIdentity);
    const Cuboid b({1, 1, 1}, {5, 0, 0}, kIdentity);
    SUBCASE("union picks the near part") {
        const CsgShape s({RoundedCuboid(a, 0), RoundedCuboid(b, 0)}, {});
        const Vec3 p{1.5, 0.2, 0};
        CHECK(csg_sdf(s, p) == cuboid_sdf(a, p));
    }
    SUBCASE("a cube minus itself is empty") {
        const CsgShape s({RoundedCuboid(a, 0)}, {RoundedCuboid(a, 0)});
        CHECK(csg_sdf(s, {0, 0, 0}) == 1.0);
    }
    SUBCASE("hollow box") {
        const Cuboid inner({0.5, 0.5, 0.5}, {0, 0, 0}, kIdentity);
        const CsgShape s({RoundedCuboid(a, 0)}, {RoundedCuboid(inner, 0)});
        CHECK(csg_sdf(s, {0, 0, 0}) > 0.0);
        CHECK(csg_sdf(s, {0.75, 0, 0}) < 0.0);
        CHECK(csg_sdf(s, {1.5, 0, 0}) > 0.0);
    }
}

TEST_CASE("cuboid sdf is rigid-motion invariant and 1-Lipschitz") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    std::uniform_real_distribution<double> pos(0.1, 1.0);
    for (int i = 0; i < 300; ++i) {
        const Vec3 half{pos(rng), pos(rng), pos(rng)};
        const Vec3 t{u(rng), u(rng), u(rng)};
        const Quaternion q = random_rotation(rng);
        const Cuboid c(half, t, q);
        const Vec3 p{u(rng), u(rng), u(rng)};
        const Vec3 p2{u(rng), u(rng), u(rng)};

        const Quaternion m = random_rotation(rng);
        const Vec3 shift{u(rng), u(rng), u(rng)};
        const Cuboid moved(half, rotate(m, t) + shift, m * q);
        CHECK(cuboid_sdf(moved, rotate(m, p) + shift) == doctest::Approx(cuboid_sdf(c, p)).epsilon(1e-9));

        CHECK(std::abs(cuboid_sdf(c, p) - cuboid_sdf(c, p2)) <= distance(p, p2) + 1e-12);
        const RoundedCuboid rc(c, 0.1 * pos(rng));
        CHECK(std::abs(rounded_cuboid_sdf(rc, p) - rounded_cuboid_sdf(rc, p2)) <= distance(p, p2) + 1e-12);
        const CsgShape s({rc}, {RoundedCuboid(Cuboid(half * 0.5, t, q), 0.0)});
        CHECK(std::abs(csg_sdf(s, p) - csg_sdf(s, p2)) <= distance(p, p2) + 1e-12);

        CHECK(cuboid_sdf(c, t) < 0.0);
        CHECK(rounded_cuboid_lower_bound(rc, p) <= rounded_cuboid_sdf(rc, p) + 1e-12);
    }
}

TEST_CASE("cuboid sdf grows without bound") {
    const Cuboid c({0.3, 0.2, 0.1}, {0.5, 0.5, 0.5}, axis_angle({1, 1, 0}, 0.7));
    double last = cuboid_sdf(c, {0, 0, 0});
    for (double r = 1; r < 1e6; r *= 10) {
        const double d = cuboid_sdf(c, {r, -r, r});
        CHECK(d > last);
        last = d;
    }
    CHECK(last > 1e5);
}

TEST_CASE("quaternion conventions") {
    const Quaternion q = axis_angle({0, 0, 1}, std::numbers::pi / 2);
    const Vec3 v = rotate(q, Vec3{1, 0, 0});
    CHECK(v.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(v.y == doctest::Approx(1.0));
    const Vec3 back = rotate_inverse(q, v);
    CHECK(back.x == doctest::Approx(1.0));
    CHECK(back.y == doctest::Approx(0.0).epsilon(1e-15));
    const Quaternion n = normalized({0, 3, 0, 4});
    CHECK(n.x == doctest::Approx(0.6));
    CHECK(n.z == doctest::Approx(0.8));
    CHECK_THROWS_AS(axis_angle({0, 0, 0}, 1.0), Error);
}
