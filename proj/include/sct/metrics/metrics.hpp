#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "sct/volume/volume.hpp"

namespace sct::metrics {

class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sample Pearson correlation. Throws MetricError on length mismatch, n < 2 or constant input.
double pearson(std::span<const double> a, std::span<const double> b);
double pearson(const Volume& a, const Volume& b);

/// Fractional ranks starting at 1; ties share the average of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Pearson correlation of average-tie ranks.
double spearman(std::span<const double> a, std::span<const double> b);
double spearman(const Volume& a, const Volume& b);

struct Overlap {
    double value = 0.0;
    bool degenerate = false;  ///< both masks empty; value is then defined as 1
};

/// 2|A & B| / (|A| + |B|)
Overlap dice_coeff(const BinaryMask& a, const BinaryMask& b);
/// |A & B| / |A | B|
Overlap jaccard(const BinaryMask& a, const BinaryMask& b);

/// 10 log10(1 / MSE) with peak 1 on normalized volumes; +infinity when identical.
double psnr(const Volume& pred, const Volume& truth);
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

struct SsimOptions {
    int window = 7;  ///< cubic Gaussian window side
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double range = 1.0;
};

/// Normalized 1D Gaussian taps; the 3D window is their outer product.
std::vector<double> gaussian_window(int side, double sigma);

/// Mean of the SSIM map over every window position fully inside the volume.
/// Local statistics are Gaussian-weighted: mu = E[x], sigma^2 = E[x^2] - mu^2, sigma_xy = E[xy] - mu_x mu_y.
double ssim(std::span<const double> a, std::span<const double> b, const Dims3& dims, const SsimOptions& opt = {});
double ssim(const Volume& a, const Volume& b, const SsimOptions& opt = {});

/// Mean |denormalize_ct(pred) - clamp(truth_hu, 0, 3071)| over skull voxels, in HU.
double mae_skull(const Volume& pred_norm_ct, const Volume& truth_hu, const BinaryMask& skull);

std::vector<double> to_double(const Volume& v);

}  // namespace sct::metrics
