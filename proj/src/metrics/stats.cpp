#include "sct/metrics/stats.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "sct/metrics/metrics.hpp"

namespace sct::metrics {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b); converges for x < (a + 1) / (a + b + 2).
double beta_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw MetricError("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw MetricError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw MetricError("incomplete_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw MetricError("student_t_cdf: df must be positive");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t >= 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw MetricError("paired_t_test: length mismatch");
    const std::size_t n = a.size();
    if (n == 0) throw MetricError("paired_t_test: no pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] == b[i] ? 0.0 : a[i] - b[i];

    TTestResult r;
    r.n = n;
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    bool all_zero = true;
    for (double v : d) {
        ss += (v - mean) * (v - mean);
        all_zero = all_zero && v == 0.0;
    }
    if (all_zero) {
        r.degenerate = true;
        return r;
    }
    if (n < 2) throw MetricError("paired_t_test: need at least two pairs");
    if (!std::isfinite(mean)) throw MetricError("paired_t_test: non-finite difference");
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double df = static_cast<double>(n - 1);
    if (sd == 0.0) {
        // Constant non-zero differences: the statistic diverges.
        r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = incomplete_beta(0.5 * df, 0.5, df / (df + r.t * r.t));
    return r;
}

}  // namespace sct::metrics
