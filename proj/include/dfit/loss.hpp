#pragma once

#include <span>
#include <vector>

#include "dfit/field.hpp"
#include "dfit/geometry2d.hpp"

namespace dfit {

struct LossConfig {
    double alpha_align = 0.01;
    double alpha_template = 10.0;
    int template_decay_s = 500;
    /// Mask width for the surface term; 0 derives it from the grid.
    double gamma_smooth = 0.0;

    void validate() const;
    double gamma_for(const GridSpec& grid) const { return gamma_smooth > 0.0 ? gamma_smooth : default_gamma(grid); }
};

struct LossBreakdown {
    double surface = 0.0;
    double align = 0.0;
    double template_term = 0.0;
    double total = 0.0;
};

/// Surface discrepancy integrated over the grid. Each field's zero level set
/// is replaced by the smoothed delta Smootherstep(1 - d^2/gamma^2), normalized
/// to unit mass over the grid, so that
///   surface = sum(m_A d_B^2)/sum(m_A) + sum(m_B d_A^2)/sum(m_B),
/// which tends to the symmetric variational Chamfer distance as gamma -> 0.
/// A term whose mask vanishes everywhere contributes 0. Symmetric in A and B.
double surface_loss(const ScalarField& a, const ScalarField& b, double gamma);

/// Mean over cells of 1 - <n_A, n_B>^2 with n the normalized finite-difference
/// gradients. Each cell is weighted by w(|g_A|) w(|g_B|), a C2 ramp from 0 at
/// gradient norm 0.25 to 1 at 0.5, so cells whose stencil straddles a zero set
/// or medial axis fade out smoothly (they still count in the mean).
double align_loss(const ScalarField& a, const ScalarField& b);

/// Surface and align terms together, optionally with d(loss)/d(value of a) at
/// every cell of `a` written to `grad_a` (resized to the cell count).
/// `grad_a` holds the gradient of surface + alpha_align * align.
struct FieldTerms {
    double surface = 0.0;
    double align = 0.0;
};
FieldTerms field_terms(const ScalarField& a, const ScalarField& b, double gamma, double alpha_align,
                       std::vector<double>* grad_a);

/// alpha_template * exp(-t/s) * |template - current|^2.
double template_loss(std::span<const double> current, std::span<const double> templ, int iteration,
                     const LossConfig& cfg);
/// Adds d(template_loss)/d(current) into `grad`.
void template_loss_gradient(std::span<const double> current, std::span<const double> templ, int iteration,
                            const LossConfig& cfg, std::span<double> grad);

/// surface + alpha_align * align + template. Pass an empty template span to
/// omit the template term (3D fitting).
LossBreakdown total_loss(const ScalarField& pred, const ScalarField& target, std::span<const double> params,
                         std::span<const double> templ, int iteration, const LossConfig& cfg);

/// Weighted sum of precomputed terms.
LossBreakdown combine_terms(double surface, double align, double template_term, const LossConfig& cfg);

/// Symmetric Chamfer distance between point sets: mean squared nearest
/// neighbor distance in both directions, by brute force.
double chamfer_sampled(std::span<const Vec2> points_a, std::span<const Vec2> points_b);
double chamfer_directed(std::span<const Vec2> from, std::span<const Vec2> to);

enum class SamplingMode { arc_length, parameter };

/// n points along the whole curve set. Arc-length mode spaces them evenly by
/// arc length (curve lengths from 256-chord quadrature) at positions
/// (k + 0.5) L / n; parameter mode spaces them evenly in the global parameter
/// (curve index + t).
std::vector<Vec2> sample_curves_uniform(const CurveSet& shape, std::size_t n,
                                        SamplingMode mode = SamplingMode::arc_length);
std::vector<Vec2> sample_curves_uniform(std::span<const QuadraticBezier> curves, std::size_t n,
                                        SamplingMode mode = SamplingMode::arc_length);

/// n points evenly spaced by arc length along segments.
std::vector<Vec2> sample_segments_uniform(std::span<const Segment> segments, std::size_t n);

}  // namespace dfit
