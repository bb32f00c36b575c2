#include <algorithm>
#include <cmath>
#include <limits>

#include "dfit/error.hpp"
#include "dfit/fit.hpp"
#include "dfit/fit_loop.hpp"

namespace dfit {

namespace {

constexpr std::size_t kChunk = 1024;

struct CellHit {
    int curve = -1;
    double t = 0.0;
    double distance = 0.0;  // before lifting
};

// Lifted distance of every cell to the nearest curve. Culling starts from the
// previous cell's winner, which is usually still nearest.
void nearest_curves(std::span<const QuadraticBezier> curves, const GridSpec& grid, std::span<double> values,
                    std::vector<CellHit>* hits) {
    parallel_chunks(grid.cell_count(), kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::size_t last = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const Vec2 p = grid.cell_center_2d(i);
            double best = std::numeric_limits<double>::infinity();
            CellHit hit;
            for (std::size_t k = 0; k < curves.size(); ++k) {
                const std::size_t ci = (last + k) % curves.size();
                const auto& c = curves[ci];
                if (std::max(control_box_distance(c, p) - c.thickness, 0.0) >= best) continue;
                const ClosestPoint cp = closest_point(c, p);
                const double v = lift_thickness(cp.distance, c.thickness);
                if (v < best) {
                    best = v;
                    hit = {static_cast<int>(ci), cp.t, cp.distance};
                }
            }
            last = static_cast<std::size_t>(hit.curve);
            values[i] = best;
            if (hits) (*hits)[i] = hit;
        }
    });
}

}  // namespace

Objective2D::Objective2D(const ScalarField& target, GlyphTemplate templ, LossConfig cfg, bool with_thickness)
    : target_(target), templ_(std::move(templ)), cfg_(cfg), with_thickness_(with_thickness) {
    if (target_.grid().rank != 2) throw Error("2D fitting needs a rank-2 target field");
    templ_.validate(false);
    cfg_.validate();
    templ_vec_ = template_vector(templ_);
    gamma_ = cfg_.gamma_for(target_.grid());
}

std::vector<double> Objective2D::initial_params() const {
    auto v = templ_vec_;
    if (with_thickness_) v.resize(parameter_count(), 0.0);
    return v;
}

ScalarField Objective2D::predicted_field(const std::vector<double>& params) const {
    const auto curves = unpack(templ_, params).flatten();
    ScalarField out(target_.grid());
    nearest_curves(curves, target_.grid(), out.values(), nullptr);
    return out;
}

double Objective2D::total_with_template(double surface, double align, const std::vector<double>& params) const {
    const std::span<const double> pts(params.data(), templ_vec_.size());
    return combine_terms(surface, align, template_loss(pts, templ_vec_, iteration_, cfg_), cfg_).total;
}

LossBreakdown Objective2D::evaluate(const std::vector<double>& params) const {
    const ScalarField pred = predicted_field(params);
    const auto terms = field_terms(pred, target_, gamma_, cfg_.alpha_align, nullptr);
    const std::span<const double> pts(params.data(), templ_vec_.size());
    return combine_terms(terms.surface, terms.align, template_loss(pts, templ_vec_, iteration_, cfg_), cfg_);
}

LossBreakdown Objective2D::analytic_gradient(const std::vector<double>& params, std::vector<double>& grad) const {
    const auto curves = unpack(templ_, params).flatten();
    const GridSpec& grid = target_.grid();
    const std::size_t n = grid.cell_count();
    ScalarField pred(grid);
    std::vector<CellHit> hits(n);
    nearest_curves(curves, grid, pred.values(), &hits);

    std::vector<double> dvalue;
    const auto terms = field_terms(pred, target_, gamma_, cfg_.alpha_align, &dvalue);

    const std::size_t np = parameter_count();
    const std::size_t thick0 = templ_vec_.size();
    const std::size_t chunks = chunk_count(n, kChunk);
    std::vector<std::vector<double>> partial(chunks);
    parallel_chunks(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        auto& g = partial[c];
        g.assign(np, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            const double w = dvalue[i];
            const CellHit& h = hits[i];
            if (w == 0.0 || h.curve < 0 || !(h.distance > 0.0)) continue;
            const auto& curve = curves[h.curve];
            if (!(h.distance > curve.thickness)) continue;
            // Envelope theorem: t is stationary, so only the explicit
            // dependence of |g(t) - p| on the control points remains.
            const Vec2 q = (curve.eval(h.t) - grid.cell_center_2d(i)) * (w / h.distance);
            const double u = 1.0 - h.t;
            const double wa = u * u, wb = 2.0 * u * h.t, wc = h.t * h.t;
            const auto& tri = templ_.connectivity[h.curve];
            g[2 * tri[0]] += q.x * wa;
            g[2 * tri[0] + 1] += q.y * wa;
            g[2 * tri[1]] += q.x * wb;
            g[2 * tri[1] + 1] += q.y * wb;
            g[2 * tri[2]] += q.x * wc;
            g[2 * tri[2] + 1] += q.y * wc;
            if (with_thickness_) g[thick0 + h.curve] -= w;
        }
    });
    grad.assign(np, 0.0);
    for (const auto& g : partial) {
        for (std::size_t k = 0; k < np; ++k) grad[k] += g[k];
    }
    const std::span<const double> pts(params.data(), thick0);
    template_loss_gradient(pts, templ_vec_, iteration_, cfg_, std::span<double>(grad.data(), thick0));
    return combine_terms(terms.surface, terms.align, template_loss(pts, templ_vec_, iteration_, cfg_), cfg_);
}

// Perturbing one parameter only moves the curves that reference it, so raw
// per-curve distances are cached and only those curves are re-evaluated.
std::vector<double> Objective2D::difference(const std::vector<double>& params, double h, bool central) const {
    const auto curves = unpack(templ_, params).flatten();
    const GridSpec& grid = target_.grid();
    const std::size_t n = grid.cell_count();
    const std::size_t nc = curves.size();
    const std::size_t thick0 = templ_vec_.size();

    std::vector<std::vector<double>> raw(nc, std::vector<double>(n));
    for (std::size_t c = 0; c < nc; ++c) {
        parallel_chunks(n, kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) raw[c][i] = closest_point(curves[c], grid.cell_center_2d(i)).distance;
        });
    }

    std::vector<std::vector<int>> users(templ_.points.size());
    for (std::size_t c = 0; c < nc; ++c) {
        for (int idx : templ_.connectivity[c]) {
            auto& u = users[idx];
            if (std::find(u.begin(), u.end(), static_cast<int>(c)) == u.end()) u.push_back(static_cast<int>(c));
        }
    }

    auto loss_at = [&](const std::vector<double>& x, const std::vector<int>& moved) {
        const auto moved_curves = unpack(templ_, x).flatten();
        std::vector<std::vector<double>> fresh(moved.size(), std::vector<double>(n));
        for (std::size_t m = 0; m < moved.size(); ++m) {
            const auto& c = moved_curves[moved[m]];
            parallel_chunks(n, kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) fresh[m][i] = closest_point(c, grid.cell_center_2d(i)).distance;
            });
        }
        ScalarField pred(grid);
        parallel_chunks(n, kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < nc; ++c) {
                    const auto it = std::find(moved.begin(), moved.end(), static_cast<int>(c));
                    const double d = it == moved.end() ? raw[c][i] : fresh[it - moved.begin()][i];
                    best = std::min(best, lift_thickness(d, moved_curves[c].thickness));
                }
                pred[i] = best;
            }
        });
        const auto terms = field_terms(pred, target_, gamma_, cfg_.alpha_align, nullptr);
        return total_with_template(terms.surface, terms.align, x);
    };

    const double base = central ? 0.0 : loss_at(params, {});
    std::vector<double> grad(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<int> moved;
        if (k < thick0) moved = users[k / 2];
        auto x = params;
        x[k] += h;
        const double up = loss_at(x, moved);
        if (central) {
            x[k] = params[k] - h;
            grad[k] = (up - loss_at(x, moved)) / (2.0 * h);
        } else {
            grad[k] = (up - base) / h;
        }
    }
    return grad;
}

std::vector<double> Objective2D::forward_difference(const std::vector<double>& params, double h) const {
    return difference(params, h, false);
}

std::vector<double> Objective2D::central_difference(const std::vector<double>& params, double h) const {
    return difference(params, h, true);
}

namespace {

// Whole-template translation and per-axis log-scale about the point centroid.
struct Placement {
    Vec2 centroid;
    std::vector<Vec2> base;

    std::vector<double> apply(const std::vector<double>& u) const {
        std::vector<double> x(2 * base.size());
        const double sx = std::exp(u[2]), sy = std::exp(u[3]);
        for (std::size_t k = 0; k < base.size(); ++k) {
            x[2 * k] = centroid.x + sx * (base[k].x - centroid.x) + u[0];
            x[2 * k + 1] = centroid.y + sy * (base[k].y - centroid.y) + u[1];
        }
        return x;
    }
    std::vector<double> chain(const std::vector<double>& u, const std::vector<double>& gx) const {
        std::vector<double> g(4, 0.0);
        const double sx = std::exp(u[2]), sy = std::exp(u[3]);
        for (std::size_t k = 0; k < base.size(); ++k) {
            g[0] += gx[2 * k];
            g[1] += gx[2 * k + 1];
            g[2] += gx[2 * k] * sx * (base[k].x - centroid.x);
            g[3] += gx[2 * k + 1] * sy * (base[k].y - centroid.y);
        }
        return g;
    }
};

}  // namespace

Fit2DResult fit2d(const ScalarField& target, const GlyphTemplate& templ, const FitConfig& cfg,
                  const ProgressCallback& progress) {
    cfg.validate();
    templ.validate(false);
    const auto& dims = target.grid().dims;
    if (target.grid().rank != 2 || dims[0] != cfg.grid_2d || dims[1] != cfg.grid_2d) {
        throw Error("target grid " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) +
                    " does not match the configured " + std::to_string(cfg.grid_2d) + "^2 grid");
    }
    const int align_iters = std::min(cfg.align_iters, cfg.max_iters / 2);
    GlyphTemplate anchor = templ;
    FitReport first;

    if (align_iters > 0) {
        LossConfig free_cfg = cfg.loss;
        free_cfg.alpha_template = 0.0;
        Objective2D obj(target, templ, free_cfg, false);
        Placement place;
        place.base = templ.points;
        for (const auto& p : templ.points) place.centroid += p * (1.0 / static_cast<double>(templ.points.size()));

        FitConfig stage = cfg;
        stage.max_iters = align_iters;
        stage.patience = 0;
        auto step = [&](int, const std::vector<double>& u, std::vector<double>& grad) {
            std::vector<double> gx;
            const LossBreakdown b = obj.analytic_gradient(place.apply(u), gx);
            grad = place.chain(u, gx);
            return b;
        };
        first = run_adam(std::vector<double>(4, 0.0), stage, progress, step, {});
        if (first.termination == Termination::non_finite) {
            first.final_params = template_vector(templ);
            if (cfg.thickness_enabled) first.final_params.resize(templ.parameter_count(true), 0.0);
            return {unpack(templ, first.final_params), std::move(first)};
        }
        const auto moved = place.apply(first.final_params);
        for (std::size_t k = 0; k < anchor.points.size(); ++k) anchor.points[k] = {moved[2 * k], moved[2 * k + 1]};
    }

    Objective2D obj(target, anchor, cfg.loss, cfg.thickness_enabled);
    const std::size_t thick0 = 2 * templ.points.size();
    FitConfig stage = cfg;
    stage.max_iters = cfg.max_iters - align_iters;
    auto step = [&](int it, const std::vector<double>& params, std::vector<double>& grad) {
        obj.set_iteration(it);
        if (cfg.gradient_mode == GradientMode::analytic) return obj.analytic_gradient(params, grad);
        grad = obj.forward_difference(params, cfg.fd_step);
        return obj.evaluate(params);
    };
    auto project = [&](std::vector<double>& params) {
        for (std::size_t k = thick0; k < params.size(); ++k) params[k] = std::max(params[k], 0.0);
    };
    ProgressCallback shifted;
    if (progress) shifted = [&](int it, const LossBreakdown& b) { progress(it + align_iters, b); };
    FitReport report = run_adam(obj.initial_params(), stage, shifted, step, project);
    report.history.insert(report.history.begin(), first.history.begin(), first.history.end());
    if (report.best_iteration >= 0) report.best_iteration += align_iters;
    report.wall_seconds += first.wall_seconds;
    CurveSet shape = unpack(templ, report.final_params);
    return {std::move(shape), std::move(report)};
}

}  // namespace dfit
