#include "dfit/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dfit/error.hpp"

namespace dfit {

using nlohmann::json;

// ---------------------------------------------------------------- PGM

namespace {

constexpr std::size_t kMaxPixels = std::size_t{1} << 26;

struct PgmCursor {
    std::string_view s;
    std::size_t pos = 0;
    std::size_t token_start = 0;

    void skip_space_and_comments() {
        while (pos < s.size()) {
            const char c = s[pos];
            if (c == '#') {
                while (pos < s.size() && s[pos] != '\n' && s[pos] != '\r') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos;
        token_start = start;
        std::size_t v = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            v = v * 10 + static_cast<std::size_t>(s[pos] - '0');
            if (v > 1'000'000'000) throw ParseError(std::string("PGM ") + what + " is too large", start);
            ++pos;
        }
        if (pos == start) throw ParseError(std::string("PGM header: expected ") + what, start);
        return v;
    }
};

}  // namespace

Image read_pgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("not a binary PGM (missing P5)", 0);
    PgmCursor cur{bytes, 2};
    const std::size_t mark = cur.pos;
    if (cur.pos < bytes.size() && bytes[cur.pos] != '#' && !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
        throw ParseError("PGM header: expected whitespace after magic", mark);
    }
    const std::size_t w = cur.number("width");
    const std::size_t w_at = cur.token_start;
    const std::size_t h = cur.number("height");
    const std::size_t h_at = cur.token_start;
    const std::size_t maxval = cur.number("maxval");
    const std::size_t maxval_at = cur.token_start;
    if (w == 0 || h == 0) throw ParseError("PGM has zero width or height", w == 0 ? w_at : h_at);
    if (maxval == 0 || maxval > 255) throw ParseError("PGM maxval must be in 1..255", maxval_at);
    if (w * h > kMaxPixels) throw ParseError("PGM image is too large", maxval_at);
    if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
        throw ParseError("PGM header: expected a single whitespace before the pixel data", cur.pos);
    }
    ++cur.pos;
    const std::size_t need = w * h;
    if (bytes.size() - cur.pos < need) {
        throw ParseError("PGM pixel data truncated: need " + std::to_string(need) + " bytes, have " +
                             std::to_string(bytes.size() - cur.pos),
                         bytes.size());
    }
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(need);
    for (std::size_t i = 0; i < need; ++i) {
        const auto v = static_cast<unsigned char>(bytes[cur.pos + i]);
        if (v > maxval) throw ParseError("PGM sample exceeds maxval", cur.pos + i);
        img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

std::string write_pgm(const Image& image) {
    if (image.pixels.size() != image.width * image.height || image.width == 0 || image.height == 0) {
        throw Error("image size does not match its pixel count");
    }
    std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.reserve(out.size() + image.pixels.size());
    for (double v : image.pixels) {
        const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    return out;
}

// ---------------------------------------------------------------- SVG

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string point_text(const Vec2& p, const SvgFrame& f) {
    const double x = f.scale * p.x;
    const double y = f.flip_y ? f.height - f.scale * p.y : f.scale * p.y;
    return format_double(x) + " " + format_double(y);
}

}  // namespace

std::string svg_path_data(const CurveLoop& loop, const SvgFrame& frame) {
    const auto& curves = loop.curves();
    std::string d = "M " + point_text(curves.front().a, frame);
    for (const auto& c : curves) d += " Q " + point_text(c.b, frame) + " " + point_text(c.c, frame);
    return d + " Z";
}

std::string write_svg(const CurveSet& shape, const SvgFrame& frame) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << format_double(frame.width) << " "
        << format_double(frame.height) << "\" width=\"" << format_double(frame.width) << "\" height=\""
        << format_double(frame.height) << "\">\n";
    for (const auto& loop : shape.loops()) {
        out << "  <path d=\"" << svg_path_data(loop, frame) << "\"";
        if (frame.stroke_from_thickness) {
            double s = 0.0;
            for (const auto& c : loop.curves()) s += c.thickness;
            s /= static_cast<double>(loop.size());
            out << " fill=\"none\" stroke=\"black\" stroke-width=\"" << format_double(2.0 * s * frame.scale) << "\"";
        } else {
            out << " fill=\"none\" stroke=\"black\"";
        }
        out << "/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

// ---------------------------------------------------------------- OBJ

std::string write_obj(const PrimitiveSet3D& shape) {
    static constexpr int kQuads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                                         {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    std::ostringstream out;
    out << "# dfit primitives, mode " << to_string(shape.mode) << "\n";
    std::size_t base = 1;
    auto put = [&](const RoundedCuboid& rc, const std::string& name) {
        const auto& c = rc.cuboid;
        out << "o " << name << "\n";
        out << "# radius " << format_double(rc.radius) << "\n";
        for (int k = 0; k < 8; ++k) {
            const Vec3 local{(k & 1 ? 1.0 : -1.0) * c.half_extents().x, (k & 2 ? 1.0 : -1.0) * c.half_extents().y,
                             (k & 4 ? 1.0 : -1.0) * c.half_extents().z};
            const Vec3 p = rotate(c.rotation(), local) + c.translation();
            out << "v " << format_double(p.x) << " " << format_double(p.y) << " " << format_double(p.z) << "\n";
        }
        for (const auto& q : kQuads) {
            out << "f " << base + q[0] << " " << base + q[1] << " " << base + q[2] << "\n";
            out << "f " << base + q[0] << " " << base + q[2] << " " << base + q[3] << "\n";
        }
        base += 8;
    };
    for (std::size_t i = 0; i < shape.positive.size(); ++i) put(shape.positive[i], "positive_" + std::to_string(i));
    for (std::size_t i = 0; i < shape.negative.size(); ++i) put(shape.negative[i], "negative_" + std::to_string(i));
    return out.str();
}

namespace {

bool parse_double(std::string_view tok, double& v) {
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size() && std::isfinite(v);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

}  // namespace

TriangleMesh read_obj(std::string_view text) {
    TriangleMesh mesh;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        const auto tok = split_ws(line);
        const std::size_t at = pos;
        pos = eol + 1;
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError("OBJ vertex needs 3 coordinates", at);
            Vec3 v;
            for (int a = 0; a < 3; ++a) {
                if (!parse_double(tok[1 + a], v[a])) throw ParseError("OBJ vertex has a malformed coordinate", at);
            }
            mesh.vertices.push_back(v);
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError("OBJ face needs at least 3 vertices", at);
            std::vector<std::size_t> idx;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view first = tok[k].substr(0, tok[k].find('/'));
                long long v = 0;
                const auto res = std::from_chars(first.data(), first.data() + first.size(), v);
                if (res.ec != std::errc() || res.ptr != first.data() + first.size() || v == 0) {
                    throw ParseError("OBJ face has a malformed index", at);
                }
                const long long n = static_cast<long long>(mesh.vertices.size());
                const long long resolved = v > 0 ? v - 1 : n + v;
                if (resolved < 0 || resolved >= n) throw ParseError("OBJ face index out of range", at);
                idx.push_back(static_cast<std::size_t>(resolved));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    return mesh;
}

// ---------------------------------------------------------------- field file

namespace {

constexpr std::uint16_t kFieldVersion = 1;

template <class T>
void put_le(std::string& out, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                     std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

struct Reader {
    std::string_view s;
    std::size_t pos = 0;

    template <class T>
    T get(const char* what) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        if (s.size() - pos < sizeof(T)) throw ParseError(std::string("field file truncated in ") + what, pos);
        U u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
        pos += sizeof(T);
        return std::bit_cast<T>(u);
    }
};

}  // namespace

std::string write_field(const ScalarField& field) {
    const GridSpec& g = field.grid();
    g.validate();
    std::string out = "DFLD";
    put_le<std::uint16_t>(out, kFieldVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.rank));
    for (int a = 0; a < g.rank; ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dims[a]));
    for (int a = 0; a < g.rank; ++a) put_le<double>(out, g.origin[a]);
    for (int a = 0; a < g.rank; ++a) put_le<double>(out, g.spacing[a]);
    out.reserve(out.size() + 4 * field.size());
    for (double v : field.values()) put_le<float>(out, static_cast<float>(v));
    return out;
}

ScalarField read_field(std::string_view bytes) {
    if (bytes.size() < 4 || bytes.substr(0, 4) != "DFLD") throw ParseError("not a field file (bad magic)", 0);
    Reader r{bytes, 4};
    const auto version = r.get<std::uint16_t>("version");
    if (version != kFieldVersion) throw ParseError("unsupported field file version " + std::to_string(version), 4);
    const std::size_t rank_at = r.pos;
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank != 2 && rank != 3) throw ParseError("field rank must be 2 or 3", rank_at);
    GridSpec g;
    g.rank = rank;
    std::size_t count = 1;
    for (int a = 0; a < rank; ++a) {
        const std::size_t at = r.pos;
        const auto d = r.get<std::uint32_t>("dims");
        if (d == 0) throw ParseError("field dimension is zero", at);
        g.dims[a] = d;
        count *= d;
        if (count > kMaxPixels * 4) throw ParseError("field is too large", at);
    }
    for (int a = 0; a < rank; ++a) {
        const std::size_t at = r.pos;
        g.origin[a] = r.get<double>("origin");
        if (!std::isfinite(g.origin[a])) throw ParseError("field origin is not finite", at);
    }
    for (int a = 0; a < rank; ++a) {
        const std::size_t at = r.pos;
        g.spacing[a] = r.get<double>("spacing");
        if (!(g.spacing[a] > 0.0) || !std::isfinite(g.spacing[a])) throw ParseError("field spacing must be positive", at);
    }
    const std::size_t payload = bytes.size() - r.pos;
    if (payload != 4 * count) {
        throw ParseError("field payload has " + std::to_string(payload) + " bytes, expected " + std::to_string(4 * count),
                         r.pos);
    }
    std::vector<double> values(count);
    for (auto& v : values) v = static_cast<double>(r.get<float>("payload"));
    return ScalarField(g, std::move(values));
}

// ---------------------------------------------------------------- JSON documents

namespace {

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what(), 0);
    }
}

void expect_format(const json& doc, const char* format) {
    if (!doc.is_object() || !doc.contains("format") || doc["format"] != format) {
        throw ParseError(std::string("expected a '") + format + "' document", 0);
    }
    if (!doc.contains("version") || doc["version"] != 1) throw ParseError(std::string(format) + ": unsupported version", 0);
}

}  // namespace

std::string write_catalog(const Catalog& catalog) {
    json doc{{"format", "dfit-catalog"}, {"version", 1}, {"templates", catalog.template_ref()}, {"records", json::array()}};
    for (const auto& r : catalog.records()) {
        doc["records"].push_back({{"id", r.id},
                                  {"class", r.class_label},
                                  {"params", r.params},
                                  {"thickness", r.thickness},
                                  {"font", r.font},
                                  {"source", r.source}});
    }
    return doc.dump(1) + "\n";
}

Catalog read_catalog(std::string_view text) {
    const json doc = parse_json(text, "catalog");
    expect_format(doc, "dfit-catalog");
    try {
        std::vector<GlyphRecord> records;
        for (const auto& item : doc.at("records")) {
            GlyphRecord r;
            r.id = item.at("id").get<std::string>();
            r.class_label = item.at("class").get<std::string>();
            r.params = item.at("params").get<std::vector<double>>();
            if (item.contains("thickness")) r.thickness = item.at("thickness").get<std::vector<double>>();
            if (item.contains("font")) r.font = item.at("font").get<std::string>();
            if (item.contains("source")) r.source = item.at("source").get<std::string>();
            records.push_back(std::move(r));
        }
        return Catalog(std::move(records), doc.value("templates", std::string()));
    } catch (const json::exception& e) {
        throw ParseError(std::string("catalog: ") + e.what(), 0);
    }
}

std::string write_curve_params(const CurveParams& p) {
    const json doc{{"format", "dfit-params"}, {"version", 1}, {"class", p.class_label}, {"params", p.params}};
    return doc.dump(1) + "\n";
}

CurveParams read_curve_params(std::string_view text) {
    const json doc = parse_json(text, "params");
    expect_format(doc, "dfit-params");
    try {
        return {doc.at("class").get<std::string>(), doc.at("params").get<std::vector<double>>()};
    } catch (const json::exception& e) {
        throw ParseError(std::string("params: ") + e.what(), 0);
    }
}

std::string write_outline(const Outline& outline) {
    json polys = json::array();
    for (const auto& poly : outline) {
        json pts = json::array();
        for (const auto& p : poly) pts.push_back({p.x, p.y});
        polys.push_back(std::move(pts));
    }
    return json{{"format", "dfit-outline"}, {"version", 1}, {"polygons", polys}}.dump(1) + "\n";
}

Outline read_outline(std::string_view text) {
    const json doc = parse_json(text, "outline");
    expect_format(doc, "dfit-outline");
    try {
        Outline out;
        for (const auto& poly : doc.at("polygons")) {
            Polygon pts;
            for (const auto& p : poly) {
                const auto xy = p.get<std::array<double, 2>>();
                if (!std::isfinite(xy[0]) || !std::isfinite(xy[1])) throw ParseError("outline: non-finite point", 0);
                pts.push_back({xy[0], xy[1]});
            }
            if (pts.size() < 2) throw ParseError("outline: polygon with fewer than 2 points", 0);
            out.push_back(std::move(pts));
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("outline: ") + e.what(), 0);
    }
}

namespace {

json primitive_json(const RoundedCuboid& rc) {
    const Cuboid& c = rc.cuboid;
    const Quaternion& q = c.rotation();
    return {{"half_extents", {c.half_extents().x, c.half_extents().y, c.half_extents().z}},
            {"translation", {c.translation().x, c.translation().y, c.translation().z}},
            {"rotation", {q.w, q.x, q.y, q.z}},
            {"radius", rc.radius}};
}

RoundedCuboid primitive_from_json(const json& j) {
    const auto b = j.at("half_extents").get<std::array<double, 3>>();
    const auto t = j.at("translation").get<std::array<double, 3>>();
    const auto q = j.at("rotation").get<std::array<double, 4>>();
    const double r = j.value("radius", 0.0);
    for (double v : {b[0], b[1], b[2], t[0], t[1], t[2], q[0], q[1], q[2], q[3], r}) {
        if (!std::isfinite(v)) throw ParseError("primitives: non-finite value", 0);
    }
    return RoundedCuboid(Cuboid({b[0], b[1], b[2]}, {t[0], t[1], t[2]}, {q[0], q[1], q[2], q[3]}), r);
}

}  // namespace

std::string write_primitives(const PrimitiveSet3D& shape) {
    json doc{{"format", "dfit-primitives"}, {"version", 1}, {"mode", to_string(shape.mode)},
             {"positive", json::array()}, {"negative", json::array()}};
    for (const auto& p : shape.positive) doc["positive"].push_back(primitive_json(p));
    for (const auto& p : shape.negative) doc["negative"].push_back(primitive_json(p));
    return doc.dump(1) + "\n";
}

PrimitiveSet3D read_primitives(std::string_view text) {
    const json doc = parse_json(text, "primitives");
    expect_format(doc, "dfit-primitives");
    try {
        PrimitiveSet3D out;
        out.mode = parse_primitive_mode(doc.at("mode").get<std::string>());
        for (const auto& p : doc.at("positive")) out.positive.push_back(primitive_from_json(p));
        for (const auto& p : doc.at("negative")) out.negative.push_back(primitive_from_json(p));
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("primitives: ") + e.what(), 0);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("primitives: ") + e.what(), 0);
    }
}

namespace {

json breakdown_json(const LossBreakdown& b) {
    return {{"surface", b.surface}, {"align", b.align}, {"template", b.template_term}, {"total", b.total}};
}

}  // namespace

std::string report_json(const FitReport& report, const FitConfig& cfg) {
    json history = json::array();
    for (const auto& b : report.history) history.push_back({b.surface, b.align, b.template_term, b.total});
    const json config{{"max_iters", cfg.max_iters},
                      {"learning_rate", cfg.learning_rate},
                      {"beta1", cfg.beta1},
                      {"beta2", cfg.beta2},
                      {"adam_epsilon", cfg.adam_epsilon},
                      {"lr_schedule", to_string(cfg.lr_schedule)},
                      {"lr_final_fraction", cfg.lr_final_fraction},
                      {"patience", cfg.patience},
                      {"alpha_align", cfg.loss.alpha_align},
                      {"alpha_template", cfg.loss.alpha_template},
                      {"template_decay_s", cfg.loss.template_decay_s},
                      {"gamma_smooth", cfg.loss.gamma_smooth},
                      {"grid_2d", cfg.grid_2d},
                      {"grid_3d", cfg.grid_3d},
                      {"seed", cfg.seed},
                      {"thickness", cfg.thickness_enabled},
                      {"prune_overlap_threshold", cfg.prune_overlap_threshold},
                      {"gradient_mode", to_string(cfg.gradient_mode)},
                      {"fd_step", cfg.fd_step},
                      {"align_iters", cfg.align_iters}};
    const json doc{{"format", "dfit-report"},
                   {"version", 1},
                   {"termination", to_string(report.termination)},
                   {"message", report.message},
                   {"iterations", report.history.size()},
                   {"best_iteration", report.best_iteration},
                   {"best", report.best_iteration >= 0 ? breakdown_json(report.best) : json(nullptr)},
                   {"params", report.final_params},
                   {"config", config},
                   {"history_columns", {"surface", "align", "template", "total"}},
                   {"history", history}};
    return doc.dump(1) + "\n";
}

std::string report_text(const FitReport& report) {
    std::ostringstream out;
    out << "termination:    " << to_string(report.termination);
    if (!report.message.empty()) out << " (" << report.message << ")";
    out << "\niterations:     " << report.history.size() << "\n";
    out << "best iteration: " << report.best_iteration << "\n";
    if (report.best_iteration >= 0) {
        out << "surface loss:   " << format_double(report.best.surface) << "\n";
        out << "align loss:     " << format_double(report.best.align) << "\n";
        out << "template loss:  " << format_double(report.best.template_term) << "\n";
        out << "total loss:     " << format_double(report.best.total) << "\n";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", report.wall_seconds);
    out << "wall time:      " << buf << " s\n";
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace dfit
