#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "dfit/error.hpp"
#include "dfit/field.hpp"
#include "dfit/glyph_template.hpp"
#include "dfit/io.hpp"

using namespace dfit;

namespace {

std::string pgm(const std::string& header, const std::vector<unsigned char>& data) {
    return header + std::string(data.begin(), data.end());
}

CurveSet sample_shape() {
    const QuadraticBezier c0{{0.1, 0.1}, {0.5, -0.2}, {0.9, 0.1}, 0.01};
    const QuadraticBezier c1{{0.9, 0.1}, {0.7, 0.8}, {0.1, 0.1}, 0.03};
    const QuadraticBezier d0{{0.3, 0.3}, {0.4, 0.35}, {0.5, 0.3}, 0.0};
    const QuadraticBezier d1{{0.5, 0.3}, {0.4, 0.2}, {0.3, 0.3}, 0.0};
    return CurveSet({CurveLoop({c0, c1}), CurveLoop({d0, d1})});
}

// Minimal reader for the path subset we emit: M, Q and Z commands.
std::vector<std::vector<QuadraticBezier>> parse_paths(const std::string& svg) {
    std::vector<std::vector<QuadraticBezier>> out;
    std::size_t pos = 0;
    while ((pos = svg.find(" d=\"", pos)) != std::string::npos) {
        pos += 4;
        const std::size_t end = svg.find('"', pos);
        std::istringstream in(svg.substr(pos, end - pos));
        std::vector<QuadraticBezier> curves;
        std::string cmd;
        Vec2 cur{};
        while (in >> cmd) {
            if (cmd == "M") {
                in >> cur.x >> cur.y;
            } else if (cmd == "Q") {
                QuadraticBezier q;
                q.a = cur;
                in >> q.b.x >> q.b.y >> q.c.x >> q.c.y;
                curves.push_back(q);
                cur = q.c;
            } else if (cmd == "Z") {
                break;
            } else {
                // Implicit repetition of Q.
                QuadraticBezier q;
                q.a = cur;
                q.b.x = std::stod(cmd);
                in >> q.b.y >> q.c.x >> q.c.y;
                curves.push_back(q);
                cur = q.c;
            }
        }
        out.push_back(curves);
        pos = end;
    }
    return out;
}

template <class F>
void fuzz(const std::string& seed_input, std::uint64_t seed, F&& reader) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    int structured = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string s = seed_input;
        const int kind = i % 4;
        if (kind == 0) {
            s.resize(std::uniform_int_distribution<std::size_t>(0, s.size())(rng));
        } else if (kind == 1) {
            const int flips = 1 + static_cast<int>(rng() % 8);
            for (int f = 0; f < flips && !s.empty(); ++f) s[rng() % s.size()] = static_cast<char>(byte(rng));
        } else if (kind == 2) {
            const std::size_t at = s.empty() ? 0 : rng() % s.size();
            std::string junk(1 + rng() % 16, '\0');
            for (auto& ch : junk) ch = static_cast<char>(byte(rng));
            s.insert(at, junk);
        } else {
            s.assign(rng() % 64, '\0');
            for (auto& ch : s) ch = static_cast<char>(byte(rng));
        }
        try {
            reader(s);
        } catch (const ParseError&) {
            ++structured;
        } catch (const Error&) {
            ++structured;
        }
    }
    CHECK(structured > 0);
}

}  // namespace

TEST_CASE("PGM 2x2 example") {
    const Image img = read_pgm(pgm("P5\n2 2\n255\n", {0, 255, 128, 64}));
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(1, 0) == 1.0);
    CHECK(img.at(0, 1) == doctest::Approx(0.502).epsilon(1e-3));
    CHECK(img.at(1, 1) == doctest::Approx(0.251).epsilon(1e-3));
    CHECK(img.at(0, 1) == 128.0 / 255.0);
    CHECK(write_pgm(img) == pgm("P5\n2 2\n255\n", {0, 255, 128, 64}));
}

TEST_CASE("PGM header variants") {
    const Image big = read_pgm(pgm("P5 128 128 255\n", std::vector<unsigned char>(16384, 7)));
    CHECK(big.width == 128);
    CHECK(big.height == 128);
    CHECK(big.pixels.size() == 16384);

    const Image commented = read_pgm(pgm("P5\n# made by hand\n3 # width\n1\n#max\n255\n", {10, 20, 30}));
    CHECK(commented.width == 3);
    CHECK(commented.at(2, 0) == 30.0 / 255.0);

    const Image low = read_pgm(pgm("P5 1 1 15\n", {15}));
    CHECK(low.at(0, 0) == 1.0);
}

TEST_CASE("PGM errors carry byte offsets") {
    auto offset_of = [](const std::string& s) {
        try {
            read_pgm(s);
        } catch (const ParseError& e) {
            return static_cast<long>(e.offset());
        }
        return -1L;
    };
    CHECK(offset_of("P2 1 1 255\n1") == 0);
    CHECK(offset_of(pgm("P5\n2 2\n255\n", {1, 2, 3})) == 14);
    CHECK(offset_of("P5\n2 x\n255\n") == 5);
    CHECK(offset_of("P5\n1 1\n300\n\x01") == 7);
    CHECK(offset_of(pgm("P5 2 1 100\n", {5, 200})) == 12);
    CHECK(offset_of("P5 0 4 255\n") == 3);
}

TEST_CASE("SVG path data") {
    const QuadraticBezier q{{0, 0}, {1, 1}, {2, 0}};
    const QuadraticBezier back{{2, 0}, {1, -1}, {0, 0}};
    const CurveLoop loop({q, back});
    CHECK(svg_path_data(loop).starts_with("M 0 0 Q 1 1 2 0"));
    CHECK(svg_path_data(loop) == "M 0 0 Q 1 1 2 0 Q 1 -1 0 0 Z");

    SvgFrame frame;
    frame.width = frame.height = 10;
    frame.scale = 10;
    frame.flip_y = true;
    CHECK(svg_path_data(loop, frame) == "M 0 10 Q 10 0 20 10 Q 10 20 0 10 Z");

    const std::string doc = write_svg(sample_shape(), frame);
    CHECK(doc.find("viewBox=\"0 0 10 10\"") != std::string::npos);
    CHECK(parse_paths(doc).size() == 2);

    frame.stroke_from_thickness = true;
    CHECK(write_svg(sample_shape(), frame).find("stroke-width=\"0.4\"") != std::string::npos);
}

TEST_CASE("SVG flattening matches curve sampling") {
    const CurveSet shape = sample_shape();
    const std::string doc = write_svg(shape);
    const auto paths = parse_paths(doc);
    REQUIRE(paths.size() == shape.loops().size());
    for (std::size_t l = 0; l < paths.size(); ++l) {
        const auto& curves = shape.loops()[l].curves();
        REQUIRE(paths[l].size() == curves.size());
        for (std::size_t k = 0; k < curves.size(); ++k) {
            for (int i = 0; i <= 64; ++i) {
                const double t = i / 64.0;
                CHECK(distance(paths[l][k].eval(t), curves[k].eval(t)) <= 1e-6);
            }
        }
        CHECK(paths[l].back().c == paths[l].front().a);
    }
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(-0.0) == "0");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("OBJ export of a unit cube") {
    PrimitiveSet3D s;
    s.positive.push_back({Cuboid({1, 1, 1}, {0, 0, 0}, {}), 0.0});
    const std::string text = write_obj(s);
    const TriangleMesh mesh = read_obj(text);
    REQUIRE(mesh.vertices.size() == 8);
    CHECK(mesh.faces.size() == 12);
    std::set<std::array<double, 3>> corners;
    for (const auto& v : mesh.vertices) {
        CHECK(std::abs(v.x) == 1.0);
        CHECK(std::abs(v.y) == 1.0);
        CHECK(std::abs(v.z) == 1.0);
        corners.insert({v.x, v.y, v.z});
    }
    CHECK(corners.size() == 8);

    // The mesh is closed and outward facing: signed distance is -1 at the center.
    const ScalarField f = mesh_signed_distance(mesh, GridSpec::make_3d(1, 1, 1, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}));
    CHECK(f[0] == doctest::Approx(-1.0));
    double signed_volume = 0.0;
    for (const auto& t : mesh.faces) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        signed_volume += dot(a, cross(b, c)) / 6.0;
    }
    CHECK(signed_volume == doctest::Approx(8.0));
}

TEST_CASE("OBJ groups and radius comments") {
    PrimitiveSet3D s;
    s.mode = PrimitiveMode::csg;
    s.positive.push_back({Cuboid({0.5, 0.4, 0.3}, {0.1, 0.2, 0.3}, axis_angle({1, 0, 0}, 0.5)), 0.05});
    s.negative.push_back({Cuboid({0.2, 0.2, 0.2}, {0, 0, 0}, {}), 0.0});
    const std::string text = write_obj(s);
    CHECK(text.find("o positive_0") != std::string::npos);
    CHECK(text.find("o negative_0") != std::string::npos);
    CHECK(text.find("# radius 0.05") != std::string::npos);
    const TriangleMesh mesh = read_obj(text);
    CHECK(mesh.vertices.size() == 16);
    CHECK(mesh.faces.size() == 24);
    for (const auto& v : std::vector<Vec3>(mesh.vertices.begin(), mesh.vertices.begin() + 8)) {
        CHECK(cuboid_sdf(s.positive[0].cuboid, v) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("OBJ reader accepts common face forms") {
    const TriangleMesh m = read_obj("# c\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -3 -2\n");
    CHECK(m.vertices.size() == 4);
    REQUIRE(m.faces.size() == 3);
    CHECK(m.faces[0] == std::array<std::size_t, 3>{0, 1, 2});
    CHECK(m.faces[1] == std::array<std::size_t, 3>{0, 2, 3});
    CHECK(m.faces[2] == std::array<std::size_t, 3>{0, 1, 2});
    CHECK_THROWS_AS(read_obj("v 0 0\n"), ParseError);
    CHECK_THROWS_AS(read_obj("v 0 0 0\nf 1 2 3\n"), ParseError);
    try {
        read_obj("v 0 0 0\nv 1 1 1\nf 1 x 2\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 16);
    }
}

TEST_CASE("field files round-trip bit-exactly") {
    const GridSpec g = GridSpec::make_3d(5, 4, 3, {-1.25, 0.5, -3.0}, {2.0, 1.7, 1.0e-3});
    ScalarField f(g);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<float> u(-5.0f, 5.0f);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
    const std::string bytes = write_field(f);
    CHECK(bytes.size() == 4 + 2 + 1 + 3 * 4 + 3 * 8 * 2 + 4 * 60);
    CHECK(bytes.substr(0, 4) == "DFLD");
    const ScalarField back = read_field(bytes);
    CHECK(back == f);
    CHECK(write_field(back) == bytes);

    const ScalarField img = rasterize_distance_2d(unpack(make_simple_template(2), template_vector(make_simple_template(2))),
                                                  glyph_grid(32));
    const ScalarField img_back = read_field(write_field(img));
    CHECK(img_back.grid() == img.grid());
    CHECK(write_field(img_back) == write_field(img));
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(img_back[i] == static_cast<double>(static_cast<float>(img[i])));
}

TEST_CASE("field file errors") {
    ScalarField f(glyph_grid(4));
    std::string bytes = write_field(f);
    CHECK_THROWS_AS(read_field(bytes.substr(0, bytes.size() - 1)), ParseError);
    CHECK_THROWS_AS(read_field(bytes + "x"), ParseError);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(read_field(bad), ParseError);
    bad = bytes;
    bad[4] = 2;
    CHECK_THROWS_AS(read_field(bad), ParseError);
    bad = bytes;
    bad[6] = 4;
    CHECK_THROWS_AS(read_field(bad), ParseError);
}

TEST_CASE("catalog round trip") {
    GlyphRecord a{"arial-A", "A", {0.1, 0.2, 0.3, 0.4}, {0.01, 0.02}, "Arial", "fonts/arial/A.pgm"};
    GlyphRecord b{"times-A", "A", {0.15, 0.25, 1.0 / 3.0, 0.45}, {}, "Times", ""};
    const Catalog c({a, b}, "letters.json");
    const std::string text = write_catalog(c);
    const Catalog back = read_catalog(text);
    CHECK(back == c);
    CHECK(write_catalog(back) == text);
    CHECK_THROWS_AS(read_catalog("{\"format\":\"dfit-catalog\",\"version\":2,\"records\":[]}"), ParseError);
    CHECK_THROWS_AS(read_catalog("{\"format\":\"other\",\"version\":1}"), ParseError);
    CHECK_THROWS_AS(read_catalog("[1,2"), ParseError);
}

TEST_CASE("params, outline and primitives round trips") {
    const CurveParams p{"B", {0.1, 1e-17, -3.5, 1.0 / 7.0}};
    CHECK(read_curve_params(write_curve_params(p)) == p);

    const Outline o{{{0, 0}, {1, 0}, {0.5, 0.8}}, {{0.2, 0.2}, {0.3, 0.2}, {0.25, 0.3}, {0.2, 0.3}}};
    CHECK(read_outline(write_outline(o)) == o);
    CHECK_THROWS_AS(read_outline("{\"format\":\"dfit-outline\",\"version\":1,\"polygons\":[[[0,0]]]}"), ParseError);

    PrimitiveSet3D s;
    s.mode = PrimitiveMode::csg;
    s.positive.push_back({Cuboid({0.5, 0.4, 0.3}, {0.1, 0.2, 0.3}, axis_angle({1, 2, 0}, 0.5)), 0.05});
    s.negative.push_back({Cuboid({0.2, 0.1, 0.2}, {0, -0.1, 0}, axis_angle({0, 0, 1}, 1.0)), 0.0});
    const std::string text = write_primitives(s);
    const PrimitiveSet3D back = read_primitives(text);
    CHECK(back.mode == s.mode);
    REQUIRE(back.positive.size() == 1);
    REQUIRE(back.negative.size() == 1);
    CHECK(write_primitives(back) == text);
    CHECK(back.positive[0].cuboid.rotation().x == s.positive[0].cuboid.rotation().x);
    CHECK(back.sdf({0.3, 0.1, 0.2}) == s.sdf({0.3, 0.1, 0.2}));
}

TEST_CASE("fit reports are deterministic text") {
    FitReport r;
    r.history = {{1.0, 0.5, 0.25, 1.255}, {0.5, 0.25, 0.0, 0.5025}};
    r.final_params = {0.1, 0.2};
    r.best_iteration = 1;
    r.best = r.history[1];
    r.wall_seconds = 12.5;
    const std::string j = report_json(r, FitConfig{});
    CHECK(j.find("\"best_iteration\"") != std::string::npos);
    CHECK(j.find("12.5") == std::string::npos);
    r.wall_seconds = 1.0;
    CHECK(report_json(r, FitConfig{}) == j);
    CHECK(report_text(r).find("completed") != std::string::npos);
}

TEST_CASE("readers survive fuzzed input") {
    fuzz(pgm("P5\n# c\n4 3\n255\n", std::vector<unsigned char>(12, 100)), 1, [](const std::string& s) { read_pgm(s); });
    ScalarField f(GridSpec::make_2d(3, 2, {0, 0}, {1, 1}), {0, 1, 2, 3, 4, 5});
    fuzz(write_field(f), 2, [](const std::string& s) { read_field(s); });
    PrimitiveSet3D s;
    s.positive.push_back({Cuboid({1, 1, 1}, {0, 0, 0}, {}), 0.1});
    fuzz(write_obj(s), 3, [](const std::string& t) { read_obj(t); });
    fuzz(write_primitives(s), 4, [](const std::string& t) { read_primitives(t); });
    const Catalog c({GlyphRecord{"x", "A", {0.1, 0.2}, {}, "F", "src"}});
    fuzz(write_catalog(c), 5, [](const std::string& t) { read_catalog(t); });
    fuzz(write_curve_params({"A", {1, 2}}), 6, [](const std::string& t) { read_curve_params(t); });
    fuzz(write_outline({{{0, 0}, {1, 0}, {1, 1}}}), 7, [](const std::string& t) { read_outline(t); });
}
