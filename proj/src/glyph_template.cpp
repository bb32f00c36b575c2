#include "dfit/glyph_template.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "dfit/error.hpp"

namespace dfit {

using nlohmann::json;

void GlyphTemplate::validate(bool require_unit_box) const {
    if (loop_sizes.empty()) throw Error("template '" + class_label + "' has no loops");
    std::size_t total = 0;
    for (int m : loop_sizes) {
        if (m < 2) throw Error("template '" + class_label + "' has a loop with fewer than 2 curves");
        total += static_cast<std::size_t>(m);
    }
    if (total != connectivity.size()) throw Error("template '" + class_label + "' loop sizes do not match connectivity");
    for (const auto& tri : connectivity) {
        for (int idx : tri) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= points.size()) {
                throw Error("template '" + class_label + "' references a missing point");
            }
        }
    }
    std::size_t first = 0;
    for (int m : loop_sizes) {
        for (int i = 0; i < m; ++i) {
            const auto& cur = connectivity[first + i];
            const auto& next = connectivity[first + (i + 1) % m];
            if (cur[2] != next[0]) throw Error("template '" + class_label + "' has an open loop");
        }
        first += static_cast<std::size_t>(m);
    }
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error("template '" + class_label + "' has a non-finite point");
        if (require_unit_box && !(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
            throw Error("template '" + class_label + "' has a point outside the unit box");
        }
    }
}

std::vector<std::array<int, 3>> interleaved_connectivity(std::span<const int> loop_sizes) {
    std::vector<std::array<int, 3>> conn;
    int base = 0;
    for (int m : loop_sizes) {
        for (int i = 0; i < m; ++i) conn.push_back({base + 2 * i, base + 2 * i + 1, base + 2 * ((i + 1) % m)});
        base += 2 * m;
    }
    return conn;
}

namespace {

// Endpoints at equal angles, controls on the circle halfway between.
void append_circle_loop(std::vector<Vec2>& pts, const Vec2& center, double radius, int curves, double start,
                        bool counter_clockwise) {
    const double dir = counter_clockwise ? 1.0 : -1.0;
    for (int i = 0; i < curves; ++i) {
        const double t0 = start + dir * 2.0 * std::numbers::pi * i / curves;
        const double tm = start + dir * 2.0 * std::numbers::pi * (i + 0.5) / curves;
        pts.push_back(center + Vec2{std::cos(t0), std::sin(t0)} * radius);
        pts.push_back(center + Vec2{std::cos(tm), std::sin(tm)} * radius);
    }
}

}  // namespace

GlyphTemplate make_simple_template(int loop_count) {
    if (loop_count < 1 || loop_count > 3) throw Error("simple templates have 1 to 3 loops");
    GlyphTemplate t;
    t.class_label = "simple" + std::to_string(loop_count);
    t.loop_sizes.push_back(15);
    append_circle_loop(t.points, {0.5, 0.5}, 0.35, 15, std::numbers::pi / 2.0, true);
    const double inner_r = 0.08;
    std::vector<Vec2> centers;
    if (loop_count == 2) centers = {{0.5, 0.5}};
    if (loop_count == 3) centers = {{0.5, 0.65}, {0.5, 0.35}};
    for (const auto& c : centers) {
        t.loop_sizes.push_back(4);
        append_circle_loop(t.points, c, inner_r, 4, std::numbers::pi / 2.0, false);
    }
    t.connectivity = interleaved_connectivity(t.loop_sizes);
    t.validate();
    return t;
}

TemplateLibrary::TemplateLibrary(std::map<std::string, GlyphTemplate> templates) : templates_(std::move(templates)) {
    for (const auto& [label, t] : templates_) t.validate();
}

TemplateLibrary TemplateLibrary::parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("template file: ") + e.what(), e.byte);
    } catch (const json::exception& e) {
        throw ParseError(std::string("template file: ") + e.what(), 0);
    }
    try {
        if (doc.at("format").get<std::string>() != "dfit-templates") throw ParseError("not a template file", 0);
        if (doc.at("version").get<int>() != 1) throw ParseError("unsupported template file version", 0);
        std::map<std::string, GlyphTemplate> out;
        for (const auto& item : doc.at("templates")) {
            GlyphTemplate t;
            t.class_label = item.at("class").get<std::string>();
            t.loop_sizes = item.at("loops").get<std::vector<int>>();
            for (const auto& p : item.at("points")) t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            if (item.contains("connectivity")) {
                t.connectivity = item.at("connectivity").get<std::vector<std::array<int, 3>>>();
            } else {
                t.connectivity = interleaved_connectivity(t.loop_sizes);
            }
            t.validate();
            if (!out.emplace(t.class_label, t).second) throw ParseError("duplicate template '" + t.class_label + "'", 0);
        }
        return TemplateLibrary(std::move(out));
    } catch (const json::exception& e) {
        throw ParseError(std::string("template file: ") + e.what(), 0);
    }
}

TemplateLibrary TemplateLibrary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open template file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string TemplateLibrary::serialize() const {
    json doc{{"format", "dfit-templates"}, {"version", 1}, {"templates", json::array()}};
    for (const auto& [label, t] : templates_) {
        json pts = json::array();
        for (const auto& p : t.points) pts.push_back({p.x, p.y});
        doc["templates"].push_back(
            {{"class", label}, {"loops", t.loop_sizes}, {"points", pts}, {"connectivity", t.connectivity}});
    }
    return doc.dump(1) + "\n";
}

const GlyphTemplate& TemplateLibrary::at(const std::string& label) const {
    const auto it = templates_.find(label);
    if (it == templates_.end()) throw Error("unknown template class '" + label + "'");
    return it->second;
}

std::vector<std::string> TemplateLibrary::labels() const {
    std::vector<std::string> out;
    for (const auto& [label, t] : templates_) out.push_back(label);
    return out;
}

GlyphTemplate make_letter_template(const std::string& letter, const TemplateLibrary& library) {
    return library.at(letter);
}

GlyphTemplate resolve_template(const std::string& name, const TemplateLibrary& library) {
    if (name == "simple1") return make_simple_template(1);
    if (name == "simple2") return make_simple_template(2);
    if (name == "simple3") return make_simple_template(3);
    return make_letter_template(name, library);
}

std::vector<double> pack(const CurveSet& shape, bool with_thickness) {
    std::vector<double> v;
    std::vector<double> thick;
    for (const auto& loop : shape.loops()) {
        for (const auto& c : loop.curves()) {
            v.insert(v.end(), {c.a.x, c.a.y, c.b.x, c.b.y});
            thick.push_back(c.thickness);
        }
    }
    if (with_thickness) v.insert(v.end(), thick.begin(), thick.end());
    return v;
}

std::vector<double> pack(const CurveSet& shape, const GlyphTemplate& templ, bool with_thickness) {
    const auto curves = shape.flatten();
    if (curves.size() != templ.curve_count()) throw Error("curve count does not match the template");
    std::vector<Vec2> pts(templ.points.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& tri = templ.connectivity[i];
        pts[tri[0]] = curves[i].a;
        pts[tri[1]] = curves[i].b;
        pts[tri[2]] = curves[i].c;
    }
    std::vector<double> v;
    v.reserve(templ.parameter_count(with_thickness));
    for (const auto& p : pts) v.insert(v.end(), {p.x, p.y});
    if (with_thickness) {
        for (const auto& c : curves) v.push_back(c.thickness);
    }
    return v;
}

CurveSet unpack(const GlyphTemplate& templ, std::span<const double> params) {
    const std::size_t np = templ.points.size();
    const std::size_t n = templ.curve_count();
    bool thick = false;
    if (params.size() == 2 * np + n) {
        thick = true;
    } else if (params.size() != 2 * np) {
        throw Error("parameter vector has length " + std::to_string(params.size()) + ", template '" +
                    templ.class_label + "' expects " + std::to_string(2 * np) + " or " + std::to_string(2 * np + n));
    }
    const auto pt = [&](int idx) { return Vec2{params[2 * idx], params[2 * idx + 1]}; };
    std::vector<CurveLoop> loops;
    std::size_t first = 0;
    for (int m : templ.loop_sizes) {
        std::vector<QuadraticBezier> curves;
        curves.reserve(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const auto& tri = templ.connectivity[first + i];
            const double s = thick ? params[2 * np + first + i] : 0.0;
            curves.push_back({pt(tri[0]), pt(tri[1]), pt(tri[2]), s});
        }
        loops.emplace_back(std::move(curves));
        first += static_cast<std::size_t>(m);
    }
    return CurveSet(std::move(loops));
}

std::vector<double> template_vector(const GlyphTemplate& templ) {
    std::vector<double> v;
    v.reserve(2 * templ.points.size());
    for (const auto& p : templ.points) v.insert(v.end(), {p.x, p.y});
    return v;
}

}  // namespace dfit
