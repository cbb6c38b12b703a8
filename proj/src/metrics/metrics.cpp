#include "sct/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sct/volume/intensity.hpp"

namespace sct::metrics {

std::vector<double> to_double(const Volume& v) { return {v.data().begin(), v.data().end()}; }

namespace {

void require_same(const Volume& a, const Volume& b, const char* op) {
    if (a.dims() != b.dims()) throw MetricError(std::string(op) + ": volume dims differ");
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw MetricError("pearson: length mismatch");
    if (a.size() < 2) throw MetricError("pearson: need at least two values");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw MetricError("pearson: constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double pearson(const Volume& a, const Volume& b) {
    require_same(a, b, "pearson");
    return pearson(to_double(a), to_double(b));
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
        // Positions i..j-1 (0-based) hold ties; 1-based average is (i + 1 + j) / 2.
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw MetricError("spearman: length mismatch");
    return pearson(average_ranks(a), average_ranks(b));
}

double spearman(const Volume& a, const Volume& b) {
    require_same(a, b, "spearman");
    return spearman(to_double(a), to_double(b));
}

namespace {

struct Counts {
    std::size_t a = 0, b = 0, both = 0;
};

Counts overlap_counts(const BinaryMask& a, const BinaryMask& b) {
    if (a.dims() != b.dims()) throw MetricError("overlap: mask dims differ");
    Counts c{a.count(), b.count(), 0};
    for (std::size_t i = 0; i < a.size(); ++i) c.both += (a[i] && b[i]) ? 1 : 0;
    return c;
}

}  // namespace

Overlap dice_coeff(const BinaryMask& a, const BinaryMask& b) {
    const Counts c = overlap_counts(a, b);
    if (c.a + c.b == 0) return {1.0, true};
    return {2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b), false};
}

Overlap jaccard(const BinaryMask& a, const BinaryMask& b) {
    const Counts c = overlap_counts(a, b);
    const std::size_t uni = c.a + c.b - c.both;
    if (uni == 0) return {1.0, true};
    return {static_cast<double>(c.both) / static_cast<double>(uni), false};
}

double psnr(const Volume& pred, const Volume& truth) {
    require_same(pred, truth, "psnr");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(pred.size());
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> gaussian_window(int side, double sigma) {
    if (side < 1) throw MetricError("gaussian_window: side must be positive");
    if (!(sigma > 0.0)) throw MetricError("gaussian_window: sigma must be positive");
    std::vector<double> g(static_cast<std::size_t>(side));
    const double c = 0.5 * (side - 1);
    double sum = 0.0;
    for (int i = 0; i < side; ++i) {
        g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

namespace {

// Valid-mode separable filtering of a (D, H, W) field with the same 1D taps on every axis.
std::vector<double> filter_valid(const std::vector<double>& f, const Dims3& dims, const std::vector<double>& g) {
    const auto s = static_cast<std::int64_t>(g.size());
    const std::int64_t D = dims.z, H = dims.y, W = dims.x;
    const std::int64_t d = D - s + 1, h = H - s + 1, w = W - s + 1;

    std::vector<double> fx(static_cast<std::size_t>(D * H * w));
    for (std::int64_t z = 0; z < D; ++z)
        for (std::int64_t y = 0; y < H; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                double acc = 0.0;
                const double* row = f.data() + (z * H + y) * W + x;
                for (std::int64_t k = 0; k < s; ++k) acc += g[k] * row[k];
                fx[(z * H + y) * w + x] = acc;
            }
    std::vector<double> fy(static_cast<std::size_t>(D * h * w));
    for (std::int64_t z = 0; z < D; ++z)
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (std::int64_t k = 0; k < s; ++k) acc += g[k] * fx[(z * H + y + k) * w + x];
                fy[(z * h + y) * w + x] = acc;
            }
    std::vector<double> fz(static_cast<std::size_t>(d * h * w));
    for (std::int64_t z = 0; z < d; ++z)
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (std::int64_t k = 0; k < s; ++k) acc += g[k] * fy[((z + k) * h + y) * w + x];
                fz[(z * h + y) * w + x] = acc;
            }
    return fz;
}

}  // namespace

double ssim(std::span<const double> a, std::span<const double> b, const Dims3& dims, const SsimOptions& opt) {
    const auto n = static_cast<std::size_t>(dims.volume());
    if (a.size() != n || b.size() != n) throw MetricError("ssim: data length does not match dims");
    if (dims.z < opt.window || dims.y < opt.window || dims.x < opt.window)
        throw MetricError("ssim: volume smaller than the " + std::to_string(opt.window) + "-voxel window");
    const auto g = gaussian_window(opt.window, opt.sigma);

    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, dims, g);
    const auto my = filter_valid(y, dims, g);
    const auto exx = filter_valid(xx, dims, g);
    const auto eyy = filter_valid(yy, dims, g);
    const auto exy = filter_valid(xy, dims, g);

    const double c1 = (opt.k1 * opt.range) * (opt.k1 * opt.range);
    const double c2 = (opt.k2 * opt.range) * (opt.k2 * opt.range);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = exx[i] - mx[i] * mx[i];
        const double vy = eyy[i] - my[i] * my[i];
        const double cxy = exy[i] - mx[i] * my[i];
        acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(mx.size());
}

double ssim(const Volume& a, const Volume& b, const SsimOptions& opt) {
    require_same(a, b, "ssim");
    return ssim(to_double(a), to_double(b), a.dims(), opt);
}

double mae_skull(const Volume& pred_norm_ct, const Volume& truth_hu, const BinaryMask& skull) {
    if (pred_norm_ct.domain() != Domain::NORM_CT) throw MetricError("mae_skull: prediction must be NORM_CT");
    if (truth_hu.domain() != Domain::HU) throw MetricError("mae_skull: truth must be HU");
    require_same(pred_norm_ct, truth_hu, "mae_skull");
    if (skull.dims() != truth_hu.dims()) throw MetricError("mae_skull: skull mask dims differ");
    if (skull.empty()) throw MetricError("mae_skull: empty skull mask");
    double acc = 0.0;
    for (std::size_t i = 0; i < skull.size(); ++i) {
        if (!skull[i]) continue;
        const double pred_hu = static_cast<double>(pred_norm_ct[i]) * kCtScale;
        const double truth = std::clamp(static_cast<double>(truth_hu[i]), 0.0, kCtScale);
        acc += std::abs(pred_hu - truth);
    }
    return acc / static_cast<double>(skull.count());
}

}  // namespace sct::metrics
