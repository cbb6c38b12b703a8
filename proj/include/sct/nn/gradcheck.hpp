#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sct::nn {

struct GradCheckOptions {
    double step = 1e-6;  ///< central-difference half width
    double rel_tol = 1e-4;
    double abs_floor = 1e-7;  ///< entries whose absolute error is below this pass outright
    std::uint64_t seed = 0;
};

struct GradCheckResult {
    std::string name;
    std::size_t checked = 0;
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;  ///< over entries above the absolute floor
    bool passed = true;
};

/// Compares `analytic` with central differences of `f` taken by perturbing `x` in place.
/// `x` is restored afterwards.
GradCheckResult check_gradient(const std::string& name, std::span<double> x, std::span<const double> analytic,
                               const std::function<double()>& f, const GradCheckOptions& opt = {});

/// Every layer type, every loss, and combined_loss back through a 2-level model on 8^3 patches
/// (all parameters and the input).
std::vector<GradCheckResult> run_gradient_suite(const GradCheckOptions& opt = {});

}  // namespace sct::nn
