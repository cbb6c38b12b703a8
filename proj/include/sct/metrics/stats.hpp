#pragma once

#include <cstddef>
#include <span>

namespace sct::metrics {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with df > 0 degrees of freedom.
double student_t_cdf(double t, double df);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  ///< two-tailed
    std::size_t n = 0;
    bool degenerate = false;  ///< every difference is zero; t = 0 and p = 1
};

/// Two-tailed paired t-test on d = a - b with df = n - 1.
/// Pairs with a == b contribute d = 0 even when both are infinite. All-zero differences are
/// reported as degenerate for any n >= 1; otherwise n >= 2 is required.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace sct::metrics
