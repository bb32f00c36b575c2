#include "dfit/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dfit/error.hpp"

namespace dfit {

GridSpec GridSpec::make_2d(std::size_t nx, std::size_t ny, const Vec2& lo, const Vec2& hi) {
    GridSpec g;
    g.rank = 2;
    g.dims = {nx, ny, 1};
    g.origin = {lo.x, lo.y, 0.0};
    g.spacing = {(hi.x - lo.x) / static_cast<double>(nx), (hi.y - lo.y) / static_cast<double>(ny), 1.0};
    g.validate();
    return g;
}

GridSpec GridSpec::make_3d(std::size_t nx, std::size_t ny, std::size_t nz, const Vec3& lo, const Vec3& hi) {
    GridSpec g;
    g.rank = 3;
    g.dims = {nx, ny, nz};
    g.origin = {lo.x, lo.y, lo.z};
    g.spacing = {(hi.x - lo.x) / static_cast<double>(nx), (hi.y - lo.y) / static_cast<double>(ny),
                 (hi.z - lo.z) / static_cast<double>(nz)};
    g.validate();
    return g;
}

void GridSpec::validate() const {
    if (rank != 2 && rank != 3) throw Error("grid rank must be 2 or 3");
    for (int a = 0; a < 3; ++a) {
        if (dims[a] == 0) throw Error("grid dimension is zero");
        if (a >= rank && dims[a] != 1) throw Error("unused grid axis must have dimension 1");
        if (a < rank && (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]) || !std::isfinite(origin[a]))) {
            throw Error("grid spacing must be positive and finite");
        }
    }
}

Vec3 GridSpec::cell_center(std::size_t idx) const {
    const auto c = coords(idx);
    Vec3 p;
    for (int a = 0; a < rank; ++a) p[a] = origin[a] + (static_cast<double>(c[a]) + 0.5) * spacing[a];
    return p;
}

double GridSpec::cell_diagonal() const {
    double s = 0.0;
    for (int a = 0; a < rank; ++a) s += spacing[a] * spacing[a];
    return std::sqrt(s);
}

GridSpec glyph_grid(std::size_t n) { return GridSpec::make_2d(n, n, {-0.1, -0.1}, {1.1, 1.1}); }

GridSpec volume_grid(std::size_t n) { return GridSpec::make_3d(n, n, n, {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}); }

ScalarField::ScalarField(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (values_.size() != grid_.cell_count()) throw Error("field value count does not match grid dimensions");
}

ScalarField::ScalarField(GridSpec grid) : grid_(grid) {
    grid_.validate();
    values_.assign(grid_.cell_count(), 0.0);
}

std::vector<Segment> outline_segments(const Outline& outline) {
    std::vector<Segment> segs;
    for (const auto& poly : outline) {
        if (poly.size() < 2) continue;
        for (std::size_t i = 0; i < poly.size(); ++i) segs.push_back({poly[i], poly[(i + 1) % poly.size()]});
    }
    return segs;
}

ScalarField rasterize_distance_2d(const CurveSet& shape, const GridSpec& grid) {
    if (grid.rank != 2) throw Error("rasterize_distance_2d needs a rank-2 grid");
    const auto curves = shape.flatten();
    if (curves.empty()) throw Error("empty geometry");
    return evaluate_on_grid(grid, [&](const Vec2& p) { return curve_set_distance(curves, p); });
}

ScalarField rasterize_distance_2d(std::span<const Segment> segments, const GridSpec& grid) {
    if (grid.rank != 2) throw Error("rasterize_distance_2d needs a rank-2 grid");
    if (segments.empty()) throw Error("empty geometry");
    return evaluate_on_grid(grid, [&](const Vec2& p) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : segments) best = std::min(best, segment_distance(p, s.a, s.b));
        return best;
    });
}

ScalarField rasterize_distance_2d(const Outline& outline, const GridSpec& grid) {
    const auto segs = outline_segments(outline);
    return rasterize_distance_2d(std::span<const Segment>(segs), grid);
}

Vec3 gradient_fd(const ScalarField& f, std::size_t cell) {
    const GridSpec& g = f.grid();
    const auto c = g.coords(cell);
    Vec3 grad;
    std::size_t stride = 1;
    for (int a = 0; a < g.rank; ++a) {
        const std::size_t n = g.dims[a];
        if (n < 3) throw Error("finite-difference gradient needs at least 3 cells per axis");
        if (c[a] == 0) {
            grad[a] = (f[cell + stride] - f[cell]) / g.spacing[a];
        } else if (c[a] == n - 1) {
            grad[a] = (f[cell] - f[cell - stride]) / g.spacing[a];
        } else {
            grad[a] = (f[cell + stride] - f[cell - stride]) / (2.0 * g.spacing[a]);
        }
        stride *= n;
    }
    return grad;
}

double smootherstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

double smootherstep_mask(double d_squared, double gamma) { return smootherstep(1.0 - d_squared / (gamma * gamma)); }

double smootherstep_mask_derivative(double d_squared, double gamma) {
    const double g2 = gamma * gamma;
    const double x = 1.0 - d_squared / g2;
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double dsdx = 30.0 * x * x * (x - 1.0) * (x - 1.0);
    return -dsdx / g2;
}

double default_gamma(const GridSpec& grid) { return 2.0 * grid.cell_diagonal(); }

namespace {

// Edge crossing of the iso value between two samples.
Vec2 crossing(const Vec2& p0, double v0, const Vec2& p1, double v1, double iso) {
    const double t = v1 == v0 ? 0.5 : (iso - v0) / (v1 - v0);
    return lerp(p0, p1, std::clamp(t, 0.0, 1.0));
}

}  // namespace

std::vector<Segment> contour_segments(const Image& image, double iso, double background) {
    if (image.width == 0 || image.height == 0) throw Error("empty image");
    const long w = static_cast<long>(image.width);
    const long h = static_cast<long>(image.height);
    const auto sample = [&](long x, long y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return background;
        return image.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    };
    const auto pos = [&](long x, long y) {
        return Vec2{(static_cast<double>(x) + 0.5) / static_cast<double>(w),
                    1.0 - (static_cast<double>(y) + 0.5) / static_cast<double>(h)};
    };

    std::vector<Segment> segs;
    for (long y = -1; y < h; ++y) {
        for (long x = -1; x < w; ++x) {
            // Square corners counter-clockwise in image space: 0 (x,y), 1 (x+1,y),
            // 2 (x+1,y+1), 3 (x,y+1).
            const long cx[4] = {x, x + 1, x + 1, x};
            const long cy[4] = {y, y, y + 1, y + 1};
            double v[4];
            Vec2 p[4];
            int code = 0;
            for (int k = 0; k < 4; ++k) {
                v[k] = sample(cx[k], cy[k]);
                p[k] = pos(cx[k], cy[k]);
                if (v[k] < iso) code |= 1 << k;
            }
            if (code == 0 || code == 15) continue;
            const auto edge = [&](int e) {
                const int k0 = e;
                const int k1 = (e + 1) % 4;
                return crossing(p[k0], v[k0], p[k1], v[k1], iso);
            };
            // Edge e joins corner e and corner e+1.
            const bool in[4] = {(code & 1) != 0, (code & 2) != 0, (code & 4) != 0, (code & 8) != 0};
            std::vector<int> cut;
            for (int e = 0; e < 4; ++e) {
                if (in[e] != in[(e + 1) % 4]) cut.push_back(e);
            }
            if (cut.size() == 2) {
                segs.push_back({edge(cut[0]), edge(cut[1])});
            } else if (cut.size() == 4) {
                // Saddle: decide connectivity from the center average.
                const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                const bool center_in = center < iso;
                if (center_in == in[0]) {
                    segs.push_back({edge(0), edge(1)});
                    segs.push_back({edge(2), edge(3)});
                } else {
                    segs.push_back({edge(3), edge(0)});
                    segs.push_back({edge(1), edge(2)});
                }
            }
        }
    }
    return segs;
}

namespace {

bool inside_even_odd(const Outline& outline, const Vec2& p) {
    bool inside = false;
    for (const auto& poly : outline) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = poly[i];
            const Vec2& b = poly[j];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (p.x < x) inside = !inside;
            }
        }
    }
    return inside;
}

}  // namespace

Image render_outline(const Outline& outline, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw Error("empty image");
    constexpr int ss = 4;
    Image img{width, height, std::vector<double>(width * height, 1.0)};
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            int hits = 0;
            for (int sy = 0; sy < ss; ++sy) {
                for (int sx = 0; sx < ss; ++sx) {
                    const Vec2 p{(static_cast<double>(x) + (sx + 0.5) / ss) / static_cast<double>(width),
                                 1.0 - (static_cast<double>(y) + (sy + 0.5) / ss) / static_cast<double>(height)};
                    if (inside_even_odd(outline, p)) ++hits;
                }
            }
            img.pixels[y * width + x] = 1.0 - static_cast<double>(hits) / (ss * ss);
        }
    }
    return img;
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Closest point by Voronoi region of the triangle features.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return norm(ap);
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return norm(bp);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return norm(p - (a + ab * (d1 / (d1 - d3))));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return norm(cp);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return norm(p - (a + ac * (d2 / (d2 - d6))));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm(p - (b + (c - b) * w));
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return norm(p - (a + ab * v + ac * w));
}

namespace {

bool ray_hits_triangle(const Vec3& o, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 pv = cross(dir, e2);
    const double det = dot(e1, pv);
    if (std::abs(det) < 1e-300) return false;
    const double inv = 1.0 / det;
    const Vec3 tv = o - a;
    const double u = dot(tv, pv) * inv;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qv = cross(tv, e1);
    const double v = dot(dir, qv) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    return dot(e2, qv) * inv > 0.0;
}

}  // namespace

ScalarField mesh_signed_distance(const TriangleMesh& mesh, const GridSpec& grid) {
    if (grid.rank != 3) throw Error("mesh_signed_distance needs a rank-3 grid");
    if (mesh.faces.empty()) throw Error("empty geometry");
    for (const auto& f : mesh.faces) {
        for (auto v : f) {
            if (v >= mesh.vertices.size()) throw Error("mesh face references a missing vertex");
        }
    }
    // A fixed direction unlikely to graze edges of axis-aligned meshes.
    const Vec3 dir{0.5773502691896258, 0.5438353972329387, 0.6091015553237373};
    return evaluate_on_grid(grid, [&](const Vec3& p) {
        double best = std::numeric_limits<double>::infinity();
        int crossings = 0;
        for (const auto& f : mesh.faces) {
            const Vec3& a = mesh.vertices[f[0]];
            const Vec3& b = mesh.vertices[f[1]];
            const Vec3& c = mesh.vertices[f[2]];
            best = std::min(best, point_triangle_distance(p, a, b, c));
            if (ray_hits_triangle(p, dir, a, b, c)) ++crossings;
        }
        return (crossings % 2 == 1) ? -best : best;
    });
}

}  // namespace dfit
