#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "dfit/geometry2d.hpp"
#include "dfit/parallel.hpp"
#include "dfit/vec.hpp"

namespace dfit {

/// Regular cell-centered grid. `origin` is the minimum corner of the domain;
/// cell (i,j,k) has its center at origin + (i+0.5, j+0.5, k+0.5) * spacing.
/// Indices are row-major with x fastest. Unused axes of a rank-2 grid have
/// dims 1.
struct GridSpec {
    int rank = 2;
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    static GridSpec make_2d(std::size_t nx, std::size_t ny, const Vec2& lo, const Vec2& hi);
    static GridSpec make_3d(std::size_t nx, std::size_t ny, std::size_t nz, const Vec3& lo, const Vec3& hi);

    /// Throws on rank outside {2,3}, zero dims or non-positive spacing.
    void validate() const;

    std::size_t cell_count() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k = 0) const { return i + dims[0] * (j + dims[1] * k); }
    std::array<std::size_t, 3> coords(std::size_t idx) const {
        return {idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1])};
    }
    Vec3 cell_center(std::size_t idx) const;
    Vec2 cell_center_2d(std::size_t idx) const {
        const Vec3 c = cell_center(idx);
        return {c.x, c.y};
    }
    /// Length of a cell's space diagonal.
    double cell_diagonal() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Glyph fitting domain: the unit em box padded by 10% on every side.
GridSpec glyph_grid(std::size_t n);
/// Shape abstraction domain: [-1, 1]^3.
GridSpec volume_grid(std::size_t n);

class ScalarField {
public:
    ScalarField(GridSpec grid, std::vector<double> values);
    explicit ScalarField(GridSpec grid);

    const GridSpec& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    GridSpec grid_;
    std::vector<double> values_;
};

struct Segment {
    Vec2 a, b;
};

/// Closed polygon outlines (last vertex connects back to the first).
using Polygon = std::vector<Vec2>;
using Outline = std::vector<Polygon>;

std::vector<Segment> outline_segments(const Outline& outline);

/// Unsigned distance to a curve set at every cell center.
ScalarField rasterize_distance_2d(const CurveSet& shape, const GridSpec& grid);
/// Unsigned distance to polygon outlines (exact point-segment distance).
ScalarField rasterize_distance_2d(const Outline& outline, const GridSpec& grid);
ScalarField rasterize_distance_2d(std::span<const Segment> segments, const GridSpec& grid);

/// Evaluates `f` at every cell center. `f` takes a Vec2 on rank-2 grids and a
/// Vec3 on rank-3 grids.
template <class F>
ScalarField evaluate_on_grid(const GridSpec& grid, F&& f) {
    ScalarField out(grid);
    auto values = out.values();
    parallel_chunks(grid.cell_count(), 4096, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if constexpr (std::is_invocable_v<F, const Vec2&> && !std::is_invocable_v<F, const Vec3&>) {
                values[i] = f(grid.cell_center_2d(i));
            } else {
                values[i] = f(grid.cell_center(i));
            }
        }
    });
    return out;
}

/// Finite-difference gradient: central differences inside, one-sided on
/// boundary cells, divided by the axis spacing. The z component is 0 for
/// rank-2 fields. Requires at least 3 cells along each used axis.
Vec3 gradient_fd(const ScalarField& f, std::size_t cell);

/// 6x^5 - 15x^4 + 10x^3 on [0,1], clamped outside.
double smootherstep(double x);
/// Smoothed indicator of the zero level set: Smootherstep(1 - d^2/gamma^2).
double smootherstep_mask(double d_squared, double gamma);
/// d/d(d^2) of smootherstep_mask.
double smootherstep_mask_derivative(double d_squared, double gamma);

/// Mask width: twice the voxel diameter (the cell space diagonal).
double default_gamma(const GridSpec& grid);

/// Grayscale image, row-major, row 0 at the top; values in [0,1].
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;

    double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Marching-squares iso-contour of an image, mapped to the unit em box
/// (x right, y up; pixel (i,j) center at ((i+0.5)/W, 1-(j+0.5)/H)). The
/// image is padded with `background` so contours close at the border.
std::vector<Segment> contour_segments(const Image& image, double iso = 0.5, double background = 1.0);

/// Renders closed polygon outlines (even-odd fill) over the unit em box with
/// 4x4 supersampling per pixel: ink 0, background 1.
Image render_outline(const Outline& outline, std::size_t width, std::size_t height);

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::size_t, 3>> faces;
};

/// Exact point-triangle distance to a triangle soup, negative inside. The
/// sign comes from the parity of ray crossings, so the mesh should be closed.
ScalarField mesh_signed_distance(const TriangleMesh& mesh, const GridSpec& grid);

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace dfit
