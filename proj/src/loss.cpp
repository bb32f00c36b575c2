#include "dfit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "dfit/error.hpp"

namespace dfit {

namespace {

constexpr std::size_t kChunk = 4096;
// Cells whose finite-difference gradient is shorter than kFadeHi fade out of
// the align term, and are ignored below kFadeLo. Distance fields have unit
// gradients except next to their zero set and medial axis.
constexpr double kFadeLo2 = 0.25 * 0.25;
constexpr double kFadeHi2 = 0.5 * 0.5;

// Weight and its derivative with respect to the squared gradient norm.
std::pair<double, double> gradient_fade(double n2) {
    if (n2 <= kFadeLo2) return {0.0, 0.0};
    if (n2 >= kFadeHi2) return {1.0, 0.0};
    const double w = kFadeHi2 - kFadeLo2;
    const double t = (n2 - kFadeLo2) / w;
    return {t * t * t * (t * (6.0 * t - 15.0) + 10.0), 30.0 * t * t * (1.0 - t) * (1.0 - t) / w};
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid() == b.grid())) throw Error("fields are defined on different grids");
}

double sum_in_order(const std::vector<double>& partial) {
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

}  // namespace

void LossConfig::validate() const {
    if (!(alpha_align >= 0.0) || !(alpha_template >= 0.0) || template_decay_s <= 0 || !(gamma_smooth >= 0.0)) {
        throw Error("loss weights must be nonnegative and the template decay positive");
    }
}

FieldTerms field_terms(const ScalarField& a, const ScalarField& b, double gamma, double alpha_align,
                       std::vector<double>* grad_a) {
    require_same_grid(a, b);
    if (!(gamma > 0.0)) throw Error("mask width gamma must be positive");
    const GridSpec& g = a.grid();
    for (int ax = 0; ax < g.rank; ++ax) {
        if (g.dims[ax] < 3) throw Error("loss needs at least 3 cells per axis");
    }
    const std::size_t n = g.cell_count();
    const std::size_t chunks = chunk_count(n, kChunk);

    // Surface term sums: mask_a, mask_a * b^2, mask_b, mask_b * a^2.
    std::vector<double> s_ma(chunks), s_mab(chunks), s_mb(chunks), s_mba(chunks), s_align(chunks);
    std::vector<Vec3> align_grad;
    if (grad_a) align_grad.assign(n, Vec3{});

    parallel_chunks(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double ma = 0, mab = 0, mb = 0, mba = 0, al = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const double da2 = a[i] * a[i];
            const double db2 = b[i] * b[i];
            const double wa = smootherstep_mask(da2, gamma);
            const double wb = smootherstep_mask(db2, gamma);
            ma += wa;
            mab += wa * db2;
            mb += wb;
            mba += wb * da2;

            const Vec3 ga = gradient_fd(a, i);
            const Vec3 gb = gradient_fd(b, i);
            const double aa = dot(ga, ga), bb = dot(gb, gb);
            const auto [fa, dfa] = gradient_fade(aa);
            const auto [fb, dfb] = gradient_fade(bb);
            if (fa == 0.0 || fb == 0.0) continue;
            const double ab = dot(ga, gb);
            const double cos2 = ab * ab / (aa * bb);
            al += fa * fb * (1.0 - cos2);
            if (grad_a) {
                // d/dga of fa * (1 - cos2), times fb.
                const Vec3 dcos2 = (gb * (ab / (aa * bb)) - ga * (ab * ab / (aa * aa * bb))) * 2.0;
                align_grad[i] = (ga * (2.0 * dfa * (1.0 - cos2)) - dcos2 * fa) * fb;
            }
        }
        s_ma[c] = ma;
        s_mab[c] = mab;
        s_mb[c] = mb;
        s_mba[c] = mba;
        s_align[c] = al;
    });

    const double ma = sum_in_order(s_ma), mab = sum_in_order(s_mab);
    const double mb = sum_in_order(s_mb), mba = sum_in_order(s_mba);
    const double inv_n = 1.0 / static_cast<double>(n);

    FieldTerms out;
    const double term_a = ma > 0.0 ? mab / ma : 0.0;
    const double term_b = mb > 0.0 ? mba / mb : 0.0;
    out.surface = term_a + term_b;
    out.align = sum_in_order(s_align) * inv_n;

    if (!grad_a) return out;
    grad_a->assign(n, 0.0);
    auto& grad = *grad_a;
    const double align_scale = alpha_align * inv_n;
    parallel_chunks(n, kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double ai = a[i];
            const double db2 = b[i] * b[i];
            double gi = 0.0;
            if (ma > 0.0) gi += smootherstep_mask_derivative(ai * ai, gamma) * 2.0 * ai * (db2 - term_a) / ma;
            if (mb > 0.0) gi += smootherstep_mask(db2, gamma) * 2.0 * ai / mb;

            // Gather the finite-difference stencil transposed: every cell x whose
            // gradient stencil reads value i along axis ax.
            if (alpha_align != 0.0) {
                const auto c = g.coords(i);
                std::size_t stride = 1;
                double ga = 0.0;
                for (int ax = 0; ax < g.rank; ++ax) {
                    const std::size_t dim = g.dims[ax];
                    const double h = g.spacing[ax];
                    const std::size_t k = c[ax];
                    // Neighbor below reads i as its "+1" sample.
                    if (k >= 1) {
                        const std::size_t x = i - stride;
                        const double coef = (k - 1 == 0) ? 1.0 / h : 1.0 / (2.0 * h);
                        ga += align_grad[x][ax] * coef;
                    }
                    // Neighbor above reads i as its "-1" sample.
                    if (k + 1 < dim) {
                        const std::size_t x = i + stride;
                        const double coef = (k + 1 == dim - 1) ? -1.0 / h : -1.0 / (2.0 * h);
                        ga += align_grad[x][ax] * coef;
                    }
                    // One-sided stencils read the cell itself.
                    if (k == 0) ga += align_grad[i][ax] * (-1.0 / h);
                    if (k == dim - 1) ga += align_grad[i][ax] * (1.0 / h);
                    stride *= dim;
                }
                gi += align_scale * ga;
            }
            grad[i] = gi;
        }
    });
    return out;
}

double surface_loss(const ScalarField& a, const ScalarField& b, double gamma) {
    return field_terms(a, b, gamma, 0.0, nullptr).surface;
}

double align_loss(const ScalarField& a, const ScalarField& b) {
    return field_terms(a, b, default_gamma(a.grid()), 1.0, nullptr).align;
}

double template_loss(std::span<const double> current, std::span<const double> templ, int iteration,
                     const LossConfig& cfg) {
    if (current.size() != templ.size()) throw Error("template and parameter vectors differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
        const double d = templ[i] - current[i];
        s += d * d;
    }
    return cfg.alpha_template * std::exp(-static_cast<double>(iteration) / cfg.template_decay_s) * s;
}

void template_loss_gradient(std::span<const double> current, std::span<const double> templ, int iteration,
                            const LossConfig& cfg, std::span<double> grad) {
    if (current.size() != templ.size() || grad.size() < current.size()) {
        throw Error("template and parameter vectors differ in length");
    }
    const double w = cfg.alpha_template * std::exp(-static_cast<double>(iteration) / cfg.template_decay_s);
    for (std::size_t i = 0; i < current.size(); ++i) grad[i] += 2.0 * w * (current[i] - templ[i]);
}

LossBreakdown combine_terms(double surface, double align, double template_term, const LossConfig& cfg) {
    return {surface, align, template_term, surface + cfg.alpha_align * align + template_term};
}

LossBreakdown total_loss(const ScalarField& pred, const ScalarField& target, std::span<const double> params,
                         std::span<const double> templ, int iteration, const LossConfig& cfg) {
    const auto terms = field_terms(pred, target, cfg.gamma_for(pred.grid()), cfg.alpha_align, nullptr);
    const double t = templ.empty() ? 0.0 : template_loss(params, templ, iteration, cfg);
    return combine_terms(terms.surface, terms.align, t, cfg);
}

double chamfer_directed(std::span<const Vec2> from, std::span<const Vec2> to) {
    if (from.empty() || to.empty()) throw Error("Chamfer distance of an empty point set");
    std::vector<double> nearest(from.size());
    parallel_chunks(from.size(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) best = std::min(best, squared_norm(from[i] - q));
            nearest[i] = best;
        }
    });
    return sum_in_order(nearest) / static_cast<double>(from.size());
}

double chamfer_sampled(std::span<const Vec2> points_a, std::span<const Vec2> points_b) {
    return chamfer_directed(points_a, points_b) + chamfer_directed(points_b, points_a);
}

namespace {

constexpr int kChords = 256;

struct ArcTable {
    // Cumulative chord length at t = j / kChords, j = 0..kChords.
    std::array<double, kChords + 1> s{};
};

ArcTable arc_table(const QuadraticBezier& c) {
    ArcTable tab;
    Vec2 prev = c.a;
    for (int j = 1; j <= kChords; ++j) {
        const Vec2 cur = c.eval(static_cast<double>(j) / kChords);
        tab.s[j] = tab.s[j - 1] + distance(prev, cur);
        prev = cur;
    }
    return tab;
}

double parameter_at_length(const ArcTable& tab, double s) {
    const auto it = std::upper_bound(tab.s.begin(), tab.s.end(), s);
    const auto j = std::clamp<long>(static_cast<long>(it - tab.s.begin()) - 1, 0, kChords - 1);
    const double len = tab.s[j + 1] - tab.s[j];
    const double frac = len > 0.0 ? std::clamp((s - tab.s[j]) / len, 0.0, 1.0) : 0.0;
    return (static_cast<double>(j) + frac) / kChords;
}

}  // namespace

std::vector<Vec2> sample_curves_uniform(std::span<const QuadraticBezier> curves, std::size_t n, SamplingMode mode) {
    if (n == 0) throw Error("sample count must be positive");
    if (curves.empty()) throw Error("empty geometry");
    std::vector<Vec2> out;
    out.reserve(n);
    const double nd = static_cast<double>(n);

    std::vector<ArcTable> tables;
    std::vector<double> offsets{0.0};
    tables.reserve(curves.size());
    for (const auto& c : curves) {
        tables.push_back(arc_table(c));
        offsets.push_back(offsets.back() + tables.back().s.back());
    }
    const double total = offsets.back();
    double extent = 0.0;
    for (const auto& c : curves) extent = std::max({extent, std::abs(c.a.x), std::abs(c.a.y), std::abs(c.c.x), std::abs(c.c.y)});
    // Evaluation round-off gives point-like curves a length of a few ulps.
    if (!(total > 1e-12 * (1.0 + extent))) throw Error("degenerate zero-length curve set");

    if (mode == SamplingMode::parameter) {
        const double m = static_cast<double>(curves.size());
        for (std::size_t k = 0; k < n; ++k) {
            const double u = (static_cast<double>(k) + 0.5) / nd * m;
            const auto ci = std::min(static_cast<std::size_t>(u), curves.size() - 1);
            out.push_back(curves[ci].eval(u - static_cast<double>(ci)));
        }
        return out;
    }

    std::size_t ci = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = (static_cast<double>(k) + 0.5) / nd * total;
        while (ci + 1 < curves.size() && s >= offsets[ci + 1]) ++ci;
        out.push_back(curves[ci].eval(parameter_at_length(tables[ci], s - offsets[ci])));
    }
    return out;
}

std::vector<Vec2> sample_curves_uniform(const CurveSet& shape, std::size_t n, SamplingMode mode) {
    const auto curves = shape.flatten();
    return sample_curves_uniform(std::span<const QuadraticBezier>(curves), n, mode);
}

std::vector<Vec2> sample_segments_uniform(std::span<const Segment> segments, std::size_t n) {
    if (n == 0) throw Error("sample count must be positive");
    std::vector<double> offsets{0.0};
    for (const auto& s : segments) offsets.push_back(offsets.back() + distance(s.a, s.b));
    const double total = offsets.back();
    if (segments.empty() || !(total > 0.0)) throw Error("degenerate zero-length geometry");
    std::vector<Vec2> out;
    out.reserve(n);
    std::size_t si = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(n) * total;
        while (si + 1 < segments.size() && s >= offsets[si + 1]) ++si;
        const double len = offsets[si + 1] - offsets[si];
        const double t = len > 0.0 ? std::clamp((s - offsets[si]) / len, 0.0, 1.0) : 0.0;
        out.push_back(lerp(segments[si].a, segments[si].b, t));
    }
    return out;
}

}  // namespace dfit
