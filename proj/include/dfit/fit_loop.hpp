#pragma once

#include <functional>
#include <vector>

#include "dfit/fit.hpp"

namespace dfit {

// Shared optimizer loop for the 2D and 3D fitters.

/// Evaluates the loss at `params` for iteration `it` and writes its gradient.
using StepFunction = std::function<LossBreakdown(int it, const std::vector<double>& params, std::vector<double>& grad)>;
/// Maps params back into the feasible set after each step.
using ProjectFunction = std::function<void(std::vector<double>&)>;

FitReport run_adam(std::vector<double> params, const FitConfig& cfg, const ProgressCallback& progress,
                   const StepFunction& step, const ProjectFunction& project);

}  // namespace dfit
