#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dfit/geometry2d.hpp"

namespace dfit {

/// Per-class initial control points plus the connectivity that turns a flat
/// point list into closed curve loops. Endpoints are shared between
/// consecutive curves of a loop.
struct GlyphTemplate {
    std::string class_label;
    std::vector<int> loop_sizes;                 // curves per loop
    std::vector<Vec2> points;                    // shared endpoints and controls
    std::vector<std::array<int, 3>> connectivity;  // (start, control, end) per curve

    std::size_t curve_count() const { return connectivity.size(); }
    /// Length of the flat parameter vector (2 per point, +1 per curve with thickness).
    std::size_t parameter_count(bool with_thickness) const {
        return 2 * points.size() + (with_thickness ? connectivity.size() : 0);
    }

    /// Throws unless every loop is a closed index chain, indices are in range
    /// and (when required) points lie in the unit em box.
    void validate(bool require_unit_box = true) const;
};

/// Connectivity for loops laid out as e0 k0 e1 k1 ... per loop, with curve i
/// = (e_i, k_i, e_{i+1 mod m}).
std::vector<std::array<int, 3>> interleaved_connectivity(std::span<const int> loop_sizes);

/// 1 to 3 loops: a 15-curve circle of radius 0.35 around (0.5, 0.5), then
/// 4-curve circles of radius 0.08 stacked on the vertical midline.
GlyphTemplate make_simple_template(int loop_count);

/// Letter templates loaded from a data file, keyed by class label.
class TemplateLibrary {
public:
    TemplateLibrary() = default;
    explicit TemplateLibrary(std::map<std::string, GlyphTemplate> templates);

    /// Parses the versioned JSON template format.
    static TemplateLibrary parse(const std::string& text);
    static TemplateLibrary load(const std::string& path);
    /// The block-letter set compiled into the library.
    static TemplateLibrary bundled();
    std::string serialize() const;

    bool contains(const std::string& label) const { return templates_.count(label) != 0; }
    const GlyphTemplate& at(const std::string& label) const;
    std::vector<std::string> labels() const;

private:
    std::map<std::string, GlyphTemplate> templates_;
};

/// Text of the compiled-in letter template file.
const std::string& bundled_letter_templates_json();

GlyphTemplate make_letter_template(const std::string& letter, const TemplateLibrary& library);

/// Resolves "simple1".."simple3" to simple templates, anything else through
/// the library.
GlyphTemplate resolve_template(const std::string& name, const TemplateLibrary& library);

/// Flat parameter vector of a curve set in the interleaved layout: per loop
/// and curve, a then b (x, y each); thickness values appended at the end when
/// requested.
std::vector<double> pack(const CurveSet& shape, bool with_thickness = false);

/// Flat vector for `shape` in the layout defined by `templ`'s connectivity.
std::vector<double> pack(const CurveSet& shape, const GlyphTemplate& templ, bool with_thickness = false);

/// Builds curves from the flat vector through the template connectivity.
/// Shared endpoints are read from one slot, so loops are closed by
/// construction. Thickness is present iff the length is 2P + n.
CurveSet unpack(const GlyphTemplate& templ, std::span<const double> params);

/// The template's own points as a flat vector.
std::vector<double> template_vector(const GlyphTemplate& templ);

}  // namespace dfit
