#include "dfit/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dfit/error.hpp"

namespace dfit {

Catalog::Catalog(std::vector<GlyphRecord> records, std::string template_ref)
    : records_(std::move(records)), template_ref_(std::move(template_ref)) {
    std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records_.size(); ++i) {
        if (records_[i].id == records_[i - 1].id) throw Error("duplicate glyph id '" + records_[i].id + "'");
    }
    for (const auto& r : records_) {
        if (r.id.empty()) throw Error("glyph record without id");
        for (double v : r.params) {
            if (!std::isfinite(v)) throw Error("glyph '" + r.id + "' has non-finite parameters");
        }
    }
}

std::vector<const GlyphRecord*> Catalog::by_class(const std::string& label) const {
    std::vector<const GlyphRecord*> out;
    for (const auto& r : records_) {
        if (r.class_label == label) out.push_back(&r);
    }
    return out;
}

std::vector<std::string> Catalog::classes() const {
    std::set<std::string> s;
    for (const auto& r : records_) s.insert(r.class_label);
    return {s.begin(), s.end()};
}

const GlyphRecord* Catalog::find(const std::string& id) const {
    const auto it = std::lower_bound(records_.begin(), records_.end(), id,
                                     [](const GlyphRecord& r, const std::string& key) { return r.id < key; });
    return it != records_.end() && it->id == id ? &*it : nullptr;
}

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

std::vector<Match> nearest(const Catalog& catalog, const std::vector<double>& query, std::size_t k,
                           const std::optional<std::string>& class_filter) {
    if (k == 0) throw Error("k must be at least 1");
    std::vector<Match> all;
    for (const auto& r : catalog.records()) {
        if (class_filter && r.class_label != *class_filter) continue;
        if (r.params.size() != query.size()) continue;
        all.push_back({&r, euclidean(r.params, query)});
    }
    if (all.empty()) throw Error("no catalog records to compare against");
    const auto less = [](const Match& a, const Match& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.record->id < b.record->id;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    all.resize(k);
    return all;
}

std::vector<PathStep> interpolate_path(const Catalog& catalog, const std::vector<double>& start,
                                       const std::vector<double>& end, std::size_t steps,
                                       const std::optional<std::string>& class_filter) {
    if (start.size() != end.size()) throw Error("path endpoints differ in length");
    if (steps < 2) throw Error("a path needs at least 2 steps");
    std::vector<PathStep> out;
    std::vector<double> x(start.size());
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = s + 1 == steps ? end[i] : start[i] + t * (end[i] - start[i]);
        const Match m = nearest(catalog, x, 1, class_filter).front();
        if (!out.empty() && out.back().record == m.record) {
            ++out.back().repeats;
            continue;
        }
        out.push_back({m.record, m.distance, t, 1});
    }
    return out;
}

Outline warp_style(const Outline& source, const std::vector<double>& source_params,
                   const std::vector<double>& target_params, double bandwidth) {
    if (source_params.size() != target_params.size()) throw Error("warp parameter vectors differ in length");
    if (source_params.empty() || source_params.size() % 2 != 0) throw Error("warp needs 2D control points");
    if (!(bandwidth > 0.0)) throw Error("warp bandwidth must be positive");
    const std::size_t n = source_params.size() / 2;
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);

    Outline out = source;
    for (auto& poly : out) {
        for (auto& p : poly) {
            double wsum = 0.0;
            Vec2 shift{};
            std::size_t closest = 0;
            double closest_d2 = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 c{source_params[2 * i], source_params[2 * i + 1]};
                const Vec2 move{target_params[2 * i] - c.x, target_params[2 * i + 1] - c.y};
                const double d2 = squared_norm(p - c);
                if (d2 < closest_d2) {
                    closest_d2 = d2;
                    closest = i;
                }
                const double w = std::exp(-d2 * inv);
                wsum += w;
                shift += move * w;
            }
            if (wsum > 0.0 && std::isfinite(wsum)) {
                p += shift * (1.0 / wsum);
            } else {
                p += Vec2{target_params[2 * closest] - source_params[2 * closest],
                          target_params[2 * closest + 1] - source_params[2 * closest + 1]};
            }
        }
    }
    return out;
}

}  // namespace dfit
