#include <doctest.h>

#include <cmath>
#include <random>

#include "dfit/error.hpp"
#include "dfit/field.hpp"
#include "dfit/glyph_template.hpp"
#include "dfit/loss.hpp"

using namespace dfit;

namespace {

ScalarField segment_field(const Segment& s, const GridSpec& g) {
    return rasterize_distance_2d(std::span<const Segment>(&s, 1), g);
}

// Arc-length position of a point on a curve, by dense chord table.
double arc_position(const QuadraticBezier& c, const Vec2& p, double& total) {
    const int n = 20000;
    double s = 0.0, best = 1e300, at = 0.0;
    Vec2 prev = c.a;
    for (int i = 0; i <= n; ++i) {
        const Vec2 q = c.eval(static_cast<double>(i) / n);
        if (i > 0) s += distance(prev, q);
        prev = q;
        const double d = distance(q, p);
        if (d < best) {
            best = d;
            at = s;
        }
    }
    total = s;
    return at;
}

}  // namespace

TEST_CASE("surface loss of a field with itself is a resolution-dependent floor") {
    // The smoothed delta has width gamma, so the self term is the mask-weighted
    // mean of d^2 inside the band: proportional to gamma^2 and vanishing as the
    // grid refines.
    const Segment s{{0.2, 0.31}, {0.83, 0.67}};
    std::vector<double> ratio;
    double last = 1.0;
    for (std::size_t n : {64, 128, 256}) {
        const GridSpec g = glyph_grid(n);
        const ScalarField f = segment_field(s, g);
        const double gamma = default_gamma(g);
        const double loss = surface_loss(f, f, gamma);
        CHECK(loss >= 0.0);
        CHECK(loss < last);
        last = loss;
        ratio.push_back(loss / (gamma * gamma));
    }
    CHECK(ratio[1] == doctest::Approx(ratio[0]).epsilon(0.1));
    CHECK(ratio[2] == doctest::Approx(ratio[1]).epsilon(0.1));
    CHECK(ratio[2] < 0.5);
}

TEST_CASE("surface loss grows quadratically with offset") {
    const GridSpec g = glyph_grid(256);
    const double gamma = default_gamma(g);
    const ScalarField a = segment_field({{0.2, 0.4}, {0.8, 0.4}}, g);
    const ScalarField b1 = segment_field({{0.2, 0.45}, {0.8, 0.45}}, g);
    const ScalarField b2 = segment_field({{0.2, 0.5}, {0.8, 0.5}}, g);
    const double r = surface_loss(a, b2, gamma) / surface_loss(a, b1, gamma);
    CHECK(r >= 3.6);
    CHECK(r <= 4.4);
}

TEST_CASE("surface loss is symmetric and nonnegative") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const GridSpec g = glyph_grid(48);
    for (int i = 0; i < 20; ++i) {
        const ScalarField a = segment_field({{u(rng), u(rng)}, {u(rng), u(rng)}}, g);
        const ScalarField b = segment_field({{u(rng), u(rng)}, {u(rng), u(rng)}}, g);
        const double gamma = default_gamma(g);
        CHECK(surface_loss(a, b, gamma) == surface_loss(b, a, gamma));
        CHECK(surface_loss(a, b, gamma) >= 0.0);
    }
    CHECK_THROWS_AS(surface_loss(segment_field({{0, 0}, {1, 1}}, glyph_grid(8)),
                                 segment_field({{0, 0}, {1, 1}}, glyph_grid(9)), 0.1),
                    Error);
}

TEST_CASE("align loss") {
    const GridSpec g = GridSpec::make_2d(32, 32, {0, 0}, {1, 1});
    const ScalarField fx = evaluate_on_grid(g, [](const Vec2& p) { return p.x; });
    const ScalarField fy = evaluate_on_grid(g, [](const Vec2& p) { return p.y; });
    const ScalarField diag = evaluate_on_grid(g, [](const Vec2& p) { return p.x + p.y; });
    const ScalarField neg = evaluate_on_grid(g, [](const Vec2& p) { return -p.x; });
    CHECK(align_loss(fx, fx) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(align_loss(fx, fy) == doctest::Approx(1.0));
    CHECK(align_loss(fx, diag) == doctest::Approx(0.5));
    CHECK(align_loss(fx, neg) == doctest::Approx(0.0).epsilon(1e-15));

    SUBCASE("self alignment of a distance field away from the medial axis") {
        const GridSpec gg = glyph_grid(128);
        const ScalarField f = segment_field({{0.2, 0.5}, {0.8, 0.5}}, gg);
        CHECK(align_loss(f, f) <= 1e-6);
    }
    SUBCASE("bounded and sign-flip invariant on random fields") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        ScalarField a(g), b(g), nb(g);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
            nb[i] = -b[i];
        }
        const double l = align_loss(a, b);
        CHECK(l >= 0.0);
        CHECK(l <= 1.0);
        CHECK(align_loss(a, nb) == doctest::Approx(l).epsilon(1e-14));
    }
}

TEST_CASE("field term gradient matches difference quotients") {
    const GridSpec g = glyph_grid(24);
    const ScalarField b = segment_field({{0.2, 0.3}, {0.7, 0.8}}, g);
    ScalarField a = segment_field({{0.25, 0.3}, {0.75, 0.75}}, g);
    const double gamma = default_gamma(g);
    std::vector<double> grad;
    field_terms(a, b, gamma, 0.0, &grad);
    REQUIRE(grad.size() == a.size());
    std::mt19937_64 rng(1);
    int checked = 0;
    for (std::size_t i = 0; i < a.size() && checked < 40; i += 7) {
        if (grad[i] == 0.0) continue;
        const double h = 1e-7, v = a[i];
        a[i] = v + h;
        const double up = field_terms(a, b, gamma, 0.0, nullptr).surface;
        a[i] = v - h;
        const double dn = field_terms(a, b, gamma, 0.0, nullptr).surface;
        a[i] = v;
        CHECK(grad[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-4));
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("align term gradient matches difference quotients") {
    // Gradient norms sweep through the fade band and beyond.
    const GridSpec g = glyph_grid(24);
    ScalarField a = evaluate_on_grid(g, [](const Vec2& p) { return 0.4 * std::sin(3 * p.x) + 0.3 * std::cos(4 * p.y); });
    const ScalarField b = evaluate_on_grid(g, [](const Vec2& p) { return 0.5 * p.x * p.y + 0.2 * std::sin(5 * p.y); });
    const double gamma = default_gamma(g), alpha = 1.0;
    auto total = [&] {
        const FieldTerms t = field_terms(a, b, gamma, alpha, nullptr);
        return t.surface + alpha * t.align;
    };
    std::vector<double> grad;
    field_terms(a, b, gamma, alpha, &grad);
    int nonzero = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double h = 1e-6, v = a[i];
        a[i] = v + h;
        const double up = total();
        a[i] = v - h;
        const double dn = total();
        a[i] = v;
        CHECK(grad[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-4).scale(1e-6));
        nonzero += grad[i] != 0.0;
    }
    CHECK(nonzero > 100);
}

TEST_CASE("template loss schedule") {
    LossConfig cfg;
    const std::vector<double> templ{0.0, 0.0};
    const std::vector<double> one{1.0, 0.0};
    CHECK(template_loss(templ, templ, 123, cfg) == 0.0);
    CHECK(template_loss(one, templ, 0, cfg) == 10.0);
    CHECK(template_loss(one, templ, 500, cfg) == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(template_loss(one, templ, 500, cfg) == doctest::Approx(3.6788).epsilon(1e-4));
    CHECK(template_loss(one, templ, 2500, cfg) == doctest::Approx(10.0 * std::exp(-5.0)).epsilon(1e-15));

    std::vector<double> grad(2, 0.0);
    const std::vector<double> cur{0.3, -0.2};
    template_loss_gradient(cur, templ, 250, cfg, grad);
    const double w = 10.0 * std::exp(-0.5);
    CHECK(grad[0] == doctest::Approx(2 * w * 0.3));
    CHECK(grad[1] == doctest::Approx(2 * w * -0.2));
}

TEST_CASE("total loss is the weighted sum") {
    LossConfig cfg;
    const LossBreakdown zero = combine_terms(0, 0, 0, cfg);
    CHECK(zero.total == 0.0);
    const LossBreakdown b = combine_terms(1.0, 1.0, 0.0, cfg);
    CHECK(b.total == doctest::Approx(1.01));

    const GridSpec g = glyph_grid(32);
    const ScalarField p = segment_field({{0.1, 0.1}, {0.9, 0.4}}, g);
    const ScalarField t = segment_field({{0.1, 0.2}, {0.8, 0.4}}, g);
    const std::vector<double> params{0.1, 0.1, 0.9, 0.4}, templ{0.1, 0.2, 0.8, 0.4};
    const LossBreakdown l = total_loss(p, t, params, templ, 17, cfg);
    CHECK(std::abs(l.total - (l.surface + cfg.alpha_align * l.align + l.template_term)) <= 1e-12);
    CHECK(l.surface == surface_loss(p, t, default_gamma(g)));
    CHECK(l.align == align_loss(p, t));
    CHECK(l.template_term == template_loss(params, templ, 17, cfg));
    const LossBreakdown no_templ = total_loss(p, t, params, {}, 17, cfg);
    CHECK(no_templ.template_term == 0.0);
}

TEST_CASE("total loss is continuous in the shape parameters") {
    const GridSpec g = glyph_grid(64);
    const GlyphTemplate templ = make_simple_template(1);
    const auto tv = template_vector(templ);
    const ScalarField target = rasterize_distance_2d(unpack(templ, tv), g);
    LossConfig cfg;
    std::vector<double> x = tv;
    for (auto& v : x) v += 0.01;
    const auto loss_at = [&](const std::vector<double>& v) {
        return total_loss(rasterize_distance_2d(unpack(templ, v), g), target, v, tv, 0, cfg).total;
    };
    const double base = loss_at(x);
    for (double eps : {1e-3, 1e-4, 1e-5}) {
        std::vector<double> y = x;
        y[6] += eps;
        CHECK(std::abs(loss_at(y) - base) / eps < 50.0);
    }
}

TEST_CASE("sampled Chamfer distance") {
    const std::vector<Vec2> x{{0, 0}}, y{{1, 0}};
    CHECK(chamfer_sampled(x, y) == 2.0);
    CHECK(chamfer_directed(x, y) == 1.0);
    const std::vector<Vec2> pts{{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.1}};
    std::vector<Vec2> shuffled{pts[2], pts[0], pts[1]};
    CHECK(chamfer_sampled(pts, shuffled) == 0.0);
    std::vector<Vec2> moved = pts;
    moved[1].x += 1e-6;
    CHECK(chamfer_sampled(pts, moved) > 0.0);
    CHECK_THROWS_AS(chamfer_sampled(pts, std::vector<Vec2>{}), Error);
}

TEST_CASE("uniform curve sampling") {
    SUBCASE("straight unit curve") {
        const QuadraticBezier c{{0, 0}, {0.5, 0}, {1, 0}};
        const auto p = sample_curves_uniform(std::span<const QuadraticBezier>(&c, 1), 3);
        REQUIRE(p.size() == 3);
        CHECK(p[0].x == doctest::Approx(1.0 / 6).epsilon(1e-12));
        CHECK(p[1].x == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p[2].x == doctest::Approx(5.0 / 6).epsilon(1e-12));
    }
    SUBCASE("two equal curves share the samples") {
        const std::vector<QuadraticBezier> cs{{{0, 0}, {0.5, 0}, {1, 0}}, {{1, 0}, {1, 0.5}, {1, 1}}};
        const auto p = sample_curves_uniform(cs, 4);
        int first = 0;
        for (const auto& q : p) first += q.y == 0.0 && q.x < 1.0;
        CHECK(first == 2);
    }
    SUBCASE("parameter sampling crowds the high-curvature middle") {
        const QuadraticBezier c{{0, 0}, {0.5, 4}, {1, 0}};
        const std::span<const QuadraticBezier> one(&c, 1);
        const auto middle_share = [&](SamplingMode mode) {
            const auto pts = sample_curves_uniform(one, 400, mode);
            int inside = 0;
            for (const auto& p : pts) {
                double total = 0.0;
                const double s = arc_position(c, p, total);
                inside += s >= 0.25 * total && s <= 0.75 * total;
            }
            return inside / 400.0;
        };
        CHECK(middle_share(SamplingMode::parameter) >= 0.6);
        CHECK(middle_share(SamplingMode::arc_length) == doctest::Approx(0.5).epsilon(0.04));
    }
    SUBCASE("segments") {
        const std::vector<Segment> segs{{{0, 0}, {1, 0}}, {{1, 0}, {1, 3}}};
        const auto p = sample_segments_uniform(segs, 4);
        CHECK(p[0].x == doctest::Approx(0.5));
        CHECK(p[1].y == doctest::Approx(0.5));
        CHECK(p[3].y == doctest::Approx(2.5));
    }
    const QuadraticBezier dot{{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
    CHECK_THROWS_AS(sample_curves_uniform(std::span<const QuadraticBezier>(&dot, 1), 10), Error);
}
