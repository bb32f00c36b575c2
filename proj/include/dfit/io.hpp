#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dfit/embedding.hpp"
#include "dfit/field.hpp"
#include "dfit/fit.hpp"
#include "dfit/geometry2d.hpp"

namespace dfit {

/// Binary 8-bit grayscale (P5). Header comments are skipped. Intensities are
/// divided by maxval. Throws ParseError with the byte offset of the problem.
Image read_pgm(std::string_view bytes);
/// P5 with maxval 255; pixels are clamped to [0,1] and rounded.
std::string write_pgm(const Image& image);

/// Mapping of shape coordinates into the SVG user space:
/// x' = scale * x, y' = flip_y ? height - scale * y : scale * y.
struct SvgFrame {
    double width = 1.0;
    double height = 1.0;
    double scale = 1.0;
    bool flip_y = false;
    /// Emits stroke-width from the loop's mean thickness instead of a fill.
    bool stroke_from_thickness = false;
};

/// Path data of one loop: "M x y Q bx by cx cy ... Z".
std::string svg_path_data(const CurveLoop& loop, const SvgFrame& frame = {});
/// A standalone SVG document with one path per loop.
std::string write_svg(const CurveSet& shape, const SvgFrame& frame = {});

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Each primitive as 8 vertices and 12 triangles, rounding radius kept as a
/// comment. CSG subtrahends go into groups named "negative_k".
std::string write_obj(const PrimitiveSet3D& shape);
/// Vertices and triangular faces of an OBJ file ("v" and "f" records).
TriangleMesh read_obj(std::string_view text);

/// Field file: "DFLD", u16 version, u8 rank, u32 dims, f64 origin and
/// spacing per axis, then f32 values; all little-endian.
std::string write_field(const ScalarField& field);
ScalarField read_field(std::string_view bytes);

std::string write_catalog(const Catalog& catalog);
Catalog read_catalog(std::string_view text);

/// Fitted 2D parameters with the class they belong to.
struct CurveParams {
    std::string class_label;
    std::vector<double> params;

    friend bool operator==(const CurveParams&, const CurveParams&) = default;
};
std::string write_curve_params(const CurveParams& p);
CurveParams read_curve_params(std::string_view text);

/// Polygon outlines as JSON: {"format":"dfit-outline","polygons":[[[x,y],...],...]}.
std::string write_outline(const Outline& outline);
Outline read_outline(std::string_view text);

/// Fitted 3D primitives as JSON (extents, translation, unit quaternion, radius).
std::string write_primitives(const PrimitiveSet3D& shape);
PrimitiveSet3D read_primitives(std::string_view text);

/// Machine-readable sidecar of a fit: config echo, final breakdown, history.
std::string report_json(const FitReport& report, const FitConfig& cfg);
/// Human-readable summary block.
std::string report_text(const FitReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);

}  // namespace dfit
