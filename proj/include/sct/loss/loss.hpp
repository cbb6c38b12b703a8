#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <stdexcept>
#include <vector>

#include "sct/volume/morphology.hpp"
#include "sct/volume/volume.hpp"

namespace sct::loss {

class LossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LossConfig {
    double lambda = 0.5;  ///< weight of BCE against Dice
    int dilation_d = 2;   ///< dilation iterations defining the regression ROI
    Connectivity connectivity = Connectivity::Face6;
    double bce_clamp_eps = 1e-7;
    double dice_smooth_eps = 1.0;

    /// Throws LossError unless 0 <= lambda <= 1, d >= 0, bce eps in (0, 1e-2] and dice eps in (0, 1].
    void validate() const;
};

// Every loss fills `grad` (when non-empty) with d loss / d pred. Reductions run in a fixed
// order so values are bit-stable.

/// 1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps)
double dice_loss(std::span<const double> pred, std::span<const double> target, double eps,
                 std::span<double> grad = {});

/// mean of -[t ln(p) + (1 - t) ln(1 - p)], p clamped to [eps, 1 - eps].
double bce_loss(std::span<const double> pred, std::span<const double> target, double eps,
                std::span<double> grad = {});

/// Mean squared error over ROI voxels. Throws LossError on an empty ROI.
double masked_mse(std::span<const double> pred, std::span<const double> target, const BinaryMask& roi,
                  std::span<double> grad = {});

struct LossParts {
    double total = 0.0;
    double dice = 0.0;
    double bce = 0.0;
    double mse = 0.0;
};

struct CombinedLoss {
    LossParts parts;
    std::vector<double> grad_seg;  ///< d total / d seg_pred
    std::vector<double> grad_reg;  ///< d total / d reg_pred
};

/// (1 - lambda) dice + lambda bce + masked_mse(reg, dilate(skull, d)).
/// The segmentation and regression terms may come from different patches, so
/// each side carries its own shape; `skull` must match the regression side.
CombinedLoss combined_loss(std::span<const double> seg_pred, std::span<const double> seg_target,
                           std::span<const double> reg_pred, std::span<const double> reg_target,
                           const BinaryMask& skull, const LossConfig& cfg);

/// One JSON-lines record: {step, dice, bce, mse, total, lambda, d}.
nlohmann::ordered_json log_record(std::size_t step, const LossParts& parts, const LossConfig& cfg);

}  // namespace sct::loss
