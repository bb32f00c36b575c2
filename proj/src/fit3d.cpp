#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dfit/dual.hpp"
#include "dfit/error.hpp"
#include "dfit/fit.hpp"
#include "dfit/fit_loop.hpp"

namespace dfit {

namespace {

constexpr std::size_t kChunk = 4096;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Prim {
    Vec3 half;
    Vec3 trans;
    Quaternion q;
    double radius = 0.0;
};

Prim decode_one(PrimitiveMode mode, const double* raw) {
    Prim p;
    p.half = {softplus(raw[0]), softplus(raw[1]), softplus(raw[2])};
    p.trans = {raw[3], raw[4], raw[5]};
    const double n = std::sqrt(raw[6] * raw[6] + raw[7] * raw[7] + raw[8] * raw[8] + raw[9] * raw[9]);
    p.q = n > 0.0 ? Quaternion{raw[6] / n, raw[7] / n, raw[8] / n, raw[9] / n} : Quaternion{};
    p.radius = mode == PrimitiveMode::cuboid ? 0.0 : softplus(raw[10]);
    return p;
}

double prim_sdf(const Prim& p, const Vec3& x) {
    return cuboid_sdf_generic(p.half, p.trans, p.q, x) - p.radius;
}

double prim_lower_bound(const Prim& p, const Vec3& x) {
    return distance(x, p.trans) - norm(p.half) - p.radius;
}

// World-to-local rotation of a primitive and its derivatives with respect to
// the four raw (unnormalized) quaternion parameters.
struct Frame {
    double m[3][3];
    double dm[4][3][3];
};

Frame local_frame(const double* raw) {
    using Q = Dual<4>;
    const Q qw = Q::variable(raw[6], 0), qx = Q::variable(raw[7], 1);
    const Q qy = Q::variable(raw[8], 2), qz = Q::variable(raw[9], 3);
    const Q n = sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    const QuatT<Q> q{qw / n, qx / n, qy / n, qz / n};
    Frame f{};
    for (int b = 0; b < 3; ++b) {
        Vec3 e{};
        e[b] = 1.0;
        const Vec3T<Q> col = rotate_inverse(q, e);
        const Q* rows[3] = {&col.x, &col.y, &col.z};
        for (int a = 0; a < 3; ++a) {
            f.m[a][b] = rows[a]->v;
            for (int j = 0; j < 4; ++j) f.dm[j][a][b] = rows[a]->d[j];
        }
    }
    return f;
}

// Weighted sums over the cells a primitive is responsible for, from which its
// parameter gradient follows in closed form.
struct Moments {
    double half[3]{};
    double local[3]{};
    double outer[3][3]{};
    double radius = 0.0;
};

// Accumulates s * d(sdf)/d(...) at world point x.
void accumulate(const Prim& p, const Frame& f, const Vec3& x, double s, Moments& mo) {
    const Vec3 v = x - p.trans;
    double l[3], d[3];
    for (int a = 0; a < 3; ++a) {
        l[a] = f.m[a][0] * v.x + f.m[a][1] * v.y + f.m[a][2] * v.z;
        d[a] = std::abs(l[a]) - p.half[a];
    }
    double g[3]{};
    const double o2 = std::max(d[0], 0.0) * std::max(d[0], 0.0) + std::max(d[1], 0.0) * std::max(d[1], 0.0) +
                      std::max(d[2], 0.0) * std::max(d[2], 0.0);
    if (o2 > 0.0) {
        const double inv = 1.0 / std::sqrt(o2);
        for (int a = 0; a < 3; ++a) g[a] = std::max(d[a], 0.0) * inv;
    } else {
        const int a = d[0] >= d[1] ? (d[0] >= d[2] ? 0 : 2) : (d[1] >= d[2] ? 1 : 2);
        g[a] = 1.0;
    }
    for (int a = 0; a < 3; ++a) {
        mo.half[a] -= s * g[a];
        const double gl = s * (l[a] < 0.0 ? -g[a] : g[a]);
        mo.local[a] += gl;
        mo.outer[a][0] += gl * v.x;
        mo.outer[a][1] += gl * v.y;
        mo.outer[a][2] += gl * v.z;
    }
    mo.radius -= s;
}

void moments_to_gradient(PrimitiveMode mode, const double* raw, const Frame& f, const Moments& mo, double* grad) {
    for (int a = 0; a < 3; ++a) grad[a] += mo.half[a] * sigmoid(raw[a]);
    for (int b = 0; b < 3; ++b) {
        double t = 0.0;
        for (int a = 0; a < 3; ++a) t -= f.m[a][b] * mo.local[a];
        grad[3 + b] += t;
    }
    for (int j = 0; j < 4; ++j) {
        double t = 0.0;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) t += f.dm[j][a][b] * mo.outer[a][b];
        }
        grad[6 + j] += t;
    }
    if (mode != PrimitiveMode::cuboid) grad[10] += mo.radius * sigmoid(raw[10]);
}

struct Active {
    int index = -1;
    double sign = 1.0;
};

// Composite distance and the primitive that determines it.
double composite(const std::vector<Prim>& prims, std::size_t n_pos, const Vec3& x, std::size_t hint, Active& act) {
    double best = std::numeric_limits<double>::infinity();
    act = {};
    for (std::size_t k = 0; k < n_pos; ++k) {
        const std::size_t i = (hint + k) % n_pos;
        if (prim_lower_bound(prims[i], x) >= best) continue;
        const double d = prim_sdf(prims[i], x);
        if (d < best) {
            best = d;
            act = {static_cast<int>(i), 1.0};
        }
    }
    for (std::size_t i = n_pos; i < prims.size(); ++i) {
        if (prim_lower_bound(prims[i], x) >= -best) continue;
        const double d = -prim_sdf(prims[i], x);
        if (d > best) {
            best = d;
            act = {static_cast<int>(i), -1.0};
        }
    }
    return best;
}

}  // namespace

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inverse(double y) {
    if (!(y > 0.0)) throw Error("softplus inverse needs a positive value");
    return y > 30.0 ? y : std::log(std::expm1(y));
}

std::string to_string(PrimitiveMode m) {
    switch (m) {
        case PrimitiveMode::cuboid: return "cuboid";
        case PrimitiveMode::rounded: return "rounded";
        case PrimitiveMode::csg: return "csg";
    }
    return "unknown";
}

PrimitiveMode parse_primitive_mode(const std::string& s) {
    if (s == "cuboid") return PrimitiveMode::cuboid;
    if (s == "rounded") return PrimitiveMode::rounded;
    if (s == "csg") return PrimitiveMode::csg;
    throw Error("unknown primitive mode '" + s + "'");
}

double PrimitiveSet3D::sdf(const Vec3& p) const {
    double result = union_sdf(positive, p);
    for (const auto& part : negative) result = std::max(result, -rounded_cuboid_sdf(part, p));
    return result;
}

std::size_t parameters_per_primitive(PrimitiveMode mode) { return mode == PrimitiveMode::cuboid ? 10 : 11; }

PrimitiveSet3D decode_primitives(PrimitiveMode mode, std::size_t n_primitives, const std::vector<double>& params) {
    const std::size_t per = parameters_per_primitive(mode);
    if (params.size() != per * n_primitives) throw Error("3D parameter vector has the wrong length");
    PrimitiveSet3D out;
    out.mode = mode;
    const std::size_t n_pos = mode == PrimitiveMode::csg ? (n_primitives + 1) / 2 : n_primitives;
    for (std::size_t k = 0; k < n_primitives; ++k) {
        Prim p = decode_one(mode, params.data() + k * per);
        const Vec3 half{std::max(p.half.x, 1e-12), std::max(p.half.y, 1e-12), std::max(p.half.z, 1e-12)};
        RoundedCuboid rc(Cuboid(half, p.trans, p.q), p.radius);
        (k < n_pos ? out.positive : out.negative).push_back(rc);
    }
    return out;
}

std::vector<double> encode_primitives(const PrimitiveSet3D& shape) {
    std::vector<double> v;
    auto put = [&](const RoundedCuboid& rc) {
        const auto& c = rc.cuboid;
        v.insert(v.end(), {softplus_inverse(c.half_extents().x), softplus_inverse(c.half_extents().y),
                           softplus_inverse(c.half_extents().z), c.translation().x, c.translation().y,
                           c.translation().z, c.rotation().w, c.rotation().x, c.rotation().y, c.rotation().z});
        if (shape.mode != PrimitiveMode::cuboid) v.push_back(softplus_inverse(std::max(rc.radius, 1e-12)));
    };
    for (const auto& rc : shape.positive) put(rc);
    for (const auto& rc : shape.negative) put(rc);
    return v;
}

Objective3D::Objective3D(const ScalarField& target, PrimitiveMode mode, std::size_t n_primitives, LossConfig cfg)
    : target_(target), mode_(mode), n_(n_primitives), cfg_(cfg) {
    if (target_.grid().rank != 3) throw Error("3D fitting needs a rank-3 target field");
    if (n_ == 0) throw Error("need at least one primitive");
    if (mode_ == PrimitiveMode::csg && n_ < 2) throw Error("CSG mode needs at least two primitives");
    cfg_.validate();
    const auto v = target_.values();
    signed_ = std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; });
    gamma_ = cfg_.gamma_for(target_.grid());
}

std::vector<double> Objective3D::initial_params(std::uint64_t seed) const {
    const GridSpec& g = target_.grid();
    // Occupied region: interior cells of a signed target, the surface band of
    // an unsigned one.
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const bool occupied = signed_ ? target_[i] <= 0.0 : target_[i] <= gamma_;
        if (!occupied) continue;
        const Vec3 c = g.cell_center(i);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }
    }
    if (lo.x > hi.x) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = g.origin[a];
            hi[a] = g.origin[a] + g.spacing[a] * static_cast<double>(g.dims[a]);
        }
    }
    const Vec3 size = hi - lo;
    int longest = 0;
    for (int a = 1; a < 3; ++a) {
        if (size[a] > size[longest]) longest = a;
    }
    std::array<std::size_t, 3> lattice{1, 1, 1};
    if (n_ == 16) {
        lattice = {2, 2, 2};
        lattice[longest] = 4;
    } else if (n_ == 8) {
        lattice = {2, 2, 2};
    } else {
        lattice[longest] = n_;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    const std::size_t per = parameters_per_primitive(mode_);
    std::vector<double> params;
    params.reserve(parameter_count());
    std::vector<std::array<std::size_t, 3>> cells;
    for (std::size_t c = 0; c < n_; ++c) {
        cells.push_back({c % lattice[0], (c / lattice[0]) % lattice[1], c / (lattice[0] * lattice[1]) % lattice[2]});
    }
    // CSG parts take the lattice as a checkerboard: positives on even cells.
    if (mode_ == PrimitiveMode::csg) {
        std::stable_partition(cells.begin(), cells.end(), [](const auto& c) { return (c[0] + c[1] + c[2]) % 2 == 0; });
    }
    for (std::size_t k = 0; k < n_; ++k) {
        const auto& idx = cells[k];
        for (int a = 0; a < 3; ++a) {
            const double extent = std::max(size[a] / static_cast<double>(lattice[a]), 2.0 * g.spacing[a]);
            params.push_back(softplus_inverse(0.25 * extent));
        }
        for (int a = 0; a < 3; ++a) {
            const double step = size[a] / static_cast<double>(lattice[a]);
            params.push_back(lo[a] + (static_cast<double>(idx[a]) + 0.5) * step + jitter(rng));
        }
        params.push_back(1.0);
        for (int a = 0; a < 3; ++a) params.push_back(jitter(rng));
        if (per == 11) params.push_back(softplus_inverse(0.02));
    }
    return params;
}

ScalarField Objective3D::predicted_field(const std::vector<double>& params) const {
    const std::size_t per = parameters_per_primitive(mode_);
    if (params.size() != parameter_count()) throw Error("3D parameter vector has the wrong length");
    std::vector<Prim> prims;
    for (std::size_t k = 0; k < n_; ++k) prims.push_back(decode_one(mode_, params.data() + k * per));
    const std::size_t n_pos = mode_ == PrimitiveMode::csg ? (n_ + 1) / 2 : n_;
    const GridSpec& g = target_.grid();
    ScalarField out(g);
    parallel_chunks(g.cell_count(), kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::size_t hint = 0;
        Active act;
        for (std::size_t i = begin; i < end; ++i) {
            const double d = composite(prims, n_pos, g.cell_center(i), hint, act);
            if (act.index >= 0 && act.sign > 0.0) hint = static_cast<std::size_t>(act.index);
            out[i] = signed_ ? d : std::abs(d);
        }
    });
    return out;
}

LossBreakdown Objective3D::evaluate(const std::vector<double>& params) const {
    const auto terms = field_terms(predicted_field(params), target_, gamma_, cfg_.alpha_align, nullptr);
    return combine_terms(terms.surface, terms.align, 0.0, cfg_);
}

LossBreakdown Objective3D::analytic_gradient(const std::vector<double>& params, std::vector<double>& grad) const {
    const std::size_t per = parameters_per_primitive(mode_);
    if (params.size() != parameter_count()) throw Error("3D parameter vector has the wrong length");
    std::vector<Prim> prims;
    for (std::size_t k = 0; k < n_; ++k) prims.push_back(decode_one(mode_, params.data() + k * per));
    const std::size_t n_pos = mode_ == PrimitiveMode::csg ? (n_ + 1) / 2 : n_;
    const GridSpec& g = target_.grid();
    const std::size_t n = g.cell_count();

    ScalarField pred(g);
    std::vector<Active> active(n);
    parallel_chunks(n, kChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::size_t hint = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const double d = composite(prims, n_pos, g.cell_center(i), hint, active[i]);
            if (active[i].index >= 0 && active[i].sign > 0.0) hint = static_cast<std::size_t>(active[i].index);
            if (!signed_ && d < 0.0) active[i].sign = -active[i].sign;
            pred[i] = signed_ ? d : std::abs(d);
        }
    });

    std::vector<double> dvalue;
    const auto terms = field_terms(pred, target_, gamma_, cfg_.alpha_align, &dvalue);

    std::vector<Frame> frames;
    for (std::size_t k = 0; k < n_; ++k) frames.push_back(local_frame(params.data() + k * per));
    std::vector<std::vector<Moments>> partial(chunk_count(n, kChunk));
    parallel_chunks(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        auto& sums = partial[c];
        sums.assign(n_, Moments{});
        for (std::size_t i = begin; i < end; ++i) {
            const double w = dvalue[i];
            const Active& a = active[i];
            if (w == 0.0 || a.index < 0) continue;
            const auto k = static_cast<std::size_t>(a.index);
            accumulate(prims[k], frames[k], g.cell_center(i), w * a.sign, sums[k]);
        }
    });
    grad.assign(parameter_count(), 0.0);
    for (const auto& sums : partial) {
        for (std::size_t k = 0; k < n_; ++k) {
            moments_to_gradient(mode_, params.data() + k * per, frames[k], sums[k], grad.data() + k * per);
        }
    }
    return combine_terms(terms.surface, terms.align, 0.0, cfg_);
}

std::vector<double> Objective3D::forward_difference(const std::vector<double>& params, double h) const {
    const double base = evaluate(params).total;
    std::vector<double> grad(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto x = params;
        x[k] += h;
        grad[k] = (evaluate(x).total - base) / h;
    }
    return grad;
}

Fit3DResult fit3d(const ScalarField& target, std::size_t n_primitives, PrimitiveMode mode, const FitConfig& cfg,
                  const ProgressCallback& progress) {
    cfg.validate();
    const auto& dims = target.grid().dims;
    if (target.grid().rank != 3 || dims[0] != cfg.grid_3d || dims[1] != cfg.grid_3d || dims[2] != cfg.grid_3d) {
        throw Error("target grid " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + "x" +
                    std::to_string(dims[2]) + " does not match the configured " + std::to_string(cfg.grid_3d) +
                    "^3 grid");
    }
    Objective3D obj(target, mode, n_primitives, cfg.loss);
    auto step = [&](int, const std::vector<double>& params, std::vector<double>& grad) {
        if (cfg.gradient_mode == GradientMode::analytic) return obj.analytic_gradient(params, grad);
        grad = obj.forward_difference(params, cfg.fd_step);
        return obj.evaluate(params);
    };
    FitReport report = run_adam(obj.initial_params(cfg.seed), cfg, progress, step, {});
    Fit3DResult out;
    out.unpruned = decode_primitives(mode, n_primitives, report.final_params);
    out.shape = out.unpruned;
    if (mode != PrimitiveMode::csg && out.shape.positive.size() > 1) {
        out.shape.positive = prune_overlapping(out.shape.positive, cfg.prune_overlap_threshold, cfg.seed);
    }
    out.report = std::move(report);
    return out;
}

std::vector<RoundedCuboid> prune_overlapping(const std::vector<RoundedCuboid>& primitives, double threshold,
                                             std::uint64_t seed) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("prune threshold must lie in (0,1]");
    constexpr int kSamples = 10000;
    const std::size_t n = primitives.size();
    if (n < 2) return primitives;

    // Fixed samples per primitive: rejection sampling in its world bounding box.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<std::vector<Vec3>> samples(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = primitives[k].cuboid;
        const double r = primitives[k].radius;
        Vec3 ext{};
        for (int a = 0; a < 3; ++a) {
            Vec3 axis{};
            axis[a] = 1.0;
            const Vec3 local = rotate_inverse(c.rotation(), axis);
            ext[a] = std::abs(local.x) * c.half_extents().x + std::abs(local.y) * c.half_extents().y +
                     std::abs(local.z) * c.half_extents().z + r;
        }
        auto& s = samples[k];
        s.reserve(kSamples);
        for (long tries = 0; s.size() < static_cast<std::size_t>(kSamples) && tries < 100L * kSamples; ++tries) {
            const Vec3 p{c.translation().x + ext.x * unit(rng), c.translation().y + ext.y * unit(rng),
                         c.translation().z + ext.z * unit(rng)};
            if (rounded_cuboid_sdf(primitives[k], p) <= 0.0) s.push_back(p);
        }
    }

    std::vector<bool> alive(n, true);
    for (;;) {
        double worst = -1.0;
        std::size_t worst_idx = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || samples[k].empty()) continue;
            std::size_t covered = 0;
            for (const auto& p : samples[k]) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != k && alive[j] && rounded_cuboid_sdf(primitives[j], p) <= 0.0) {
                        ++covered;
                        break;
                    }
                }
            }
            const double frac = static_cast<double>(covered) / static_cast<double>(samples[k].size());
            if (frac > worst) {
                worst = frac;
                worst_idx = k;
            }
        }
        if (worst_idx == n || worst <= threshold) break;
        alive[worst_idx] = false;
        if (std::count(alive.begin(), alive.end(), true) < 2) break;
    }
    std::vector<RoundedCuboid> out;
    for (std::size_t k = 0; k < n; ++k) {
        if (alive[k]) out.push_back(primitives[k]);
    }
    return out;
}

}  // namespace dfit
