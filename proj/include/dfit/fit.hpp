#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dfit/field.hpp"
#include "dfit/geometry3d.hpp"
#include "dfit/glyph_template.hpp"
#include "dfit/loss.hpp"

namespace dfit {

enum class GradientMode { analytic, finite_difference };
enum class LrSchedule { constant, cosine };
enum class Termination { completed, converged, non_finite };

std::string to_string(GradientMode m);
std::string to_string(LrSchedule s);
std::string to_string(Termination t);
GradientMode parse_gradient_mode(const std::string& s);
LrSchedule parse_lr_schedule(const std::string& s);

struct FitConfig {
    int max_iters = 2000;
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    LrSchedule lr_schedule = LrSchedule::cosine;
    /// Cosine schedule floor as a fraction of learning_rate.
    double lr_final_fraction = 0.01;
    /// Stop once the best total has not improved for this many iterations (0 disables).
    int patience = 0;
    LossConfig loss;
    std::size_t grid_2d = 128;
    std::size_t grid_3d = 64;
    std::uint64_t seed = 0;
    bool thickness_enabled = false;
    double prune_overlap_threshold = 0.8;
    GradientMode gradient_mode = GradientMode::analytic;
    /// Forward-difference step in parameter units.
    double fd_step = 1e-4;
    /// 2D only: iterations (out of max_iters) spent first on a global
    /// translation and per-axis scale of the whole template. The template
    /// term is anchored at the aligned template afterwards.
    int align_iters = 200;

    void validate() const;
    double learning_rate_at(int iteration) const;
};

struct FitReport {
    std::vector<LossBreakdown> history;
    std::vector<double> final_params;  // best iterate
    int best_iteration = -1;
    LossBreakdown best;
    double wall_seconds = 0.0;
    Termination termination = Termination::completed;
    std::string message;
};

/// Called after every iteration with the breakdown evaluated at that step.
using ProgressCallback = std::function<void(int, const LossBreakdown&)>;

/// Adam on a flat vector, with bias correction.
class Adam {
public:
    Adam(std::size_t n, double beta1, double beta2, double epsilon);
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

/// Loss of a template-parameterized curve set against a fixed 2D target, at a
/// fixed iteration of the template schedule.
class Objective2D {
public:
    Objective2D(const ScalarField& target, GlyphTemplate templ, LossConfig cfg, bool with_thickness);

    std::size_t parameter_count() const { return templ_.parameter_count(with_thickness_); }
    std::vector<double> initial_params() const;
    void set_iteration(int t) { iteration_ = t; }

    ScalarField predicted_field(const std::vector<double>& params) const;
    LossBreakdown evaluate(const std::vector<double>& params) const;
    /// Breakdown plus gradient through the closest-point envelope.
    LossBreakdown analytic_gradient(const std::vector<double>& params, std::vector<double>& grad) const;
    /// (L(x + h e_i) - L(x)) / h for every parameter.
    std::vector<double> forward_difference(const std::vector<double>& params, double h) const;
    /// (L(x + h e_i) - L(x - h e_i)) / 2h for every parameter.
    std::vector<double> central_difference(const std::vector<double>& params, double h) const;

    const GlyphTemplate& glyph_template() const { return templ_; }
    const ScalarField& target() const { return target_; }

private:
    double total_with_template(double surface, double align, const std::vector<double>& params) const;
    std::vector<double> difference(const std::vector<double>& params, double h, bool central) const;

    ScalarField target_;
    GlyphTemplate templ_;
    LossConfig cfg_;
    bool with_thickness_;
    int iteration_ = 0;
    std::vector<double> templ_vec_;
    double gamma_;
};

struct Fit2DResult {
    CurveSet shape;
    FitReport report;
};

/// Direct minimization of the total loss over template parameters.
Fit2DResult fit2d(const ScalarField& target, const GlyphTemplate& templ, const FitConfig& cfg,
                  const ProgressCallback& progress = {});

enum class PrimitiveMode { cuboid, rounded, csg };
std::string to_string(PrimitiveMode m);
PrimitiveMode parse_primitive_mode(const std::string& s);

/// Fitted 3D abstraction. In csg mode the shape is the union of `positive`
/// minus the union of `negative`; otherwise `negative` is empty.
struct PrimitiveSet3D {
    PrimitiveMode mode = PrimitiveMode::cuboid;
    std::vector<RoundedCuboid> positive;
    std::vector<RoundedCuboid> negative;

    double sdf(const Vec3& p) const;
};

/// Unconstrained per-primitive parameters: 3 raw extents (softplus), 3
/// translation, 4 raw quaternion (normalized on use), 1 raw radius (softplus,
/// absent in cuboid mode).
std::size_t parameters_per_primitive(PrimitiveMode mode);
PrimitiveSet3D decode_primitives(PrimitiveMode mode, std::size_t n_primitives, const std::vector<double>& params);
std::vector<double> encode_primitives(const PrimitiveSet3D& shape);

double softplus(double x);
double softplus_inverse(double y);

class Objective3D {
public:
    /// Signed targets (any negative value) are compared with signed
    /// predictions, unsigned ones with |prediction|. In csg mode the first
    /// half of the primitives are positive.
    Objective3D(const ScalarField& target, PrimitiveMode mode, std::size_t n_primitives, LossConfig cfg);

    std::size_t parameter_count() const { return n_ * parameters_per_primitive(mode_); }
    bool signed_target() const { return signed_; }
    /// Jittered lattice of small boxes over the target's occupied bounding box.
    std::vector<double> initial_params(std::uint64_t seed) const;

    ScalarField predicted_field(const std::vector<double>& params) const;
    LossBreakdown evaluate(const std::vector<double>& params) const;
    LossBreakdown analytic_gradient(const std::vector<double>& params, std::vector<double>& grad) const;
    std::vector<double> forward_difference(const std::vector<double>& params, double h) const;

    PrimitiveMode mode() const { return mode_; }
    std::size_t primitive_count() const { return n_; }

private:
    ScalarField target_;
    PrimitiveMode mode_;
    std::size_t n_;
    LossConfig cfg_;
    bool signed_;
    double gamma_;
};

struct Fit3DResult {
    PrimitiveSet3D shape;        // after pruning
    PrimitiveSet3D unpruned;
    FitReport report;
};

Fit3DResult fit3d(const ScalarField& target, std::size_t n_primitives, PrimitiveMode mode, const FitConfig& cfg,
                  const ProgressCallback& progress = {});

/// Repeatedly drops the primitive whose volume fraction inside the union of
/// the others (10^4 rejection samples each) is largest, while that fraction
/// exceeds `threshold`.
std::vector<RoundedCuboid> prune_overlapping(const std::vector<RoundedCuboid>& primitives, double threshold,
                                             std::uint64_t seed = 0);

}  // namespace dfit
