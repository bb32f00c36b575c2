#include "dfit/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "dfit/error.hpp"
#include "dfit/fit_loop.hpp"

namespace dfit {

std::string to_string(GradientMode m) { return m == GradientMode::analytic ? "analytic" : "finite_difference"; }
std::string to_string(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "cosine"; }
std::string to_string(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::converged: return "converged";
        case Termination::non_finite: return "non_finite";
    }
    return "unknown";
}

GradientMode parse_gradient_mode(const std::string& s) {
    if (s == "analytic") return GradientMode::analytic;
    if (s == "finite_difference" || s == "fd") return GradientMode::finite_difference;
    throw Error("unknown gradient mode '" + s + "'");
}

LrSchedule parse_lr_schedule(const std::string& s) {
    if (s == "constant") return LrSchedule::constant;
    if (s == "cosine") return LrSchedule::cosine;
    throw Error("unknown learning-rate schedule '" + s + "'");
}

void FitConfig::validate() const {
    if (max_iters <= 0) throw Error("max_iters must be positive");
    if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw Error("Adam betas must lie in [0,1)");
    if (!(adam_epsilon > 0.0)) throw Error("Adam epsilon must be positive");
    if (!(lr_final_fraction >= 0.0 && lr_final_fraction <= 1.0)) throw Error("lr_final_fraction must lie in [0,1]");
    if (patience < 0) throw Error("patience must be nonnegative");
    if (grid_2d < 3 || grid_3d < 3) throw Error("grids need at least 3 cells per axis");
    if (!(prune_overlap_threshold > 0.0 && prune_overlap_threshold <= 1.0)) {
        throw Error("prune threshold must lie in (0,1]");
    }
    if (!(fd_step > 0.0)) throw Error("finite-difference step must be positive");
    loss.validate();
}

double FitConfig::learning_rate_at(int iteration) const {
    if (lr_schedule == LrSchedule::constant || max_iters <= 1) return learning_rate;
    const double frac = std::clamp(static_cast<double>(iteration) / (max_iters - 1), 0.0, 1.0);
    const double lo = learning_rate * lr_final_fraction;
    return lo + 0.5 * (learning_rate - lo) * (1.0 + std::cos(std::numbers::pi * frac));
}

Adam::Adam(std::size_t n, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

FitReport run_adam(std::vector<double> params, const FitConfig& cfg, const ProgressCallback& progress,
                   const StepFunction& step, const ProjectFunction& project) {
    const auto start = std::chrono::steady_clock::now();
    FitReport report;
    report.final_params = params;
    report.best.total = std::numeric_limits<double>::infinity();
    Adam adam(params.size(), cfg.beta1, cfg.beta2, cfg.adam_epsilon);
    std::vector<double> grad(params.size());
    int since_best = 0;

    for (int it = 0; it < cfg.max_iters; ++it) {
        const LossBreakdown b = step(it, params, grad);
        const bool finite_grad = std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
        if (!std::isfinite(b.total) || !finite_grad) {
            report.termination = Termination::non_finite;
            report.message = "non-finite " + std::string(std::isfinite(b.total) ? "gradient" : "loss") +
                             " at iteration " + std::to_string(it);
            break;
        }
        report.history.push_back(b);
        if (progress) progress(it, b);
        if (b.total < report.best.total) {
            report.best = b;
            report.best_iteration = it;
            report.final_params = params;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            report.termination = Termination::converged;
            report.message = "no improvement for " + std::to_string(cfg.patience) + " iterations";
            break;
        }
        adam.step(params, grad, cfg.learning_rate_at(it));
        if (project) project(params);
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace dfit
