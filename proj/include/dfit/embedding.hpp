#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dfit/field.hpp"
#include "dfit/glyph_template.hpp"

namespace dfit {

struct GlyphRecord {
    std::string id;
    std::string class_label;
    std::vector<double> params;  // template point coordinates, thickness excluded
    std::vector<double> thickness;
    std::string font;
    std::string source;

    friend bool operator==(const GlyphRecord&, const GlyphRecord&) = default;
};

/// Fitted glyphs with unique ids, kept sorted by id.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<GlyphRecord> records, std::string template_ref = {});

    const std::vector<GlyphRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::string& template_ref() const { return template_ref_; }

    /// Records of one class, in id order.
    std::vector<const GlyphRecord*> by_class(const std::string& label) const;
    std::vector<std::string> classes() const;
    const GlyphRecord* find(const std::string& id) const;

    friend bool operator==(const Catalog&, const Catalog&) = default;

private:
    std::vector<GlyphRecord> records_;
    std::string template_ref_;
};

struct Match {
    const GlyphRecord* record = nullptr;
    double distance = 0.0;
};

/// The k records closest to `query` in Euclidean distance, ascending, ties
/// broken by id. Only records of `class_filter` (if set) and of matching
/// length are candidates; throws if none remain.
std::vector<Match> nearest(const Catalog& catalog, const std::vector<double>& query, std::size_t k,
                           const std::optional<std::string>& class_filter = std::nullopt);

struct PathStep {
    const GlyphRecord* record = nullptr;
    double distance = 0.0;
    double t_first = 0.0;       // first interpolant mapped to this record
    std::size_t repeats = 1;    // consecutive interpolants collapsed into this step
};

/// Nearest record for each of `steps` evenly spaced interpolants between the
/// endpoints (inclusive), with consecutive duplicates collapsed.
std::vector<PathStep> interpolate_path(const Catalog& catalog, const std::vector<double>& start,
                                       const std::vector<double>& end, std::size_t steps,
                                       const std::optional<std::string>& class_filter = std::nullopt);

/// Moves each outline point by the Gaussian-weighted (normalized) average of
/// the control-point translations source -> target. If every weight
/// underflows, the nearest control point's translation is used.
Outline warp_style(const Outline& source, const std::vector<double>& source_params,
                   const std::vector<double>& target_params, double bandwidth = 0.15);

}  // namespace dfit
