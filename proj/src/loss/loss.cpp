#include "sct/loss/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sct::loss {

void LossConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw LossError("lambda must lie in [0, 1]");
    if (dilation_d < 0) throw LossError("dilation count must be non-negative");
    if (!(bce_clamp_eps > 0.0 && bce_clamp_eps <= 1e-2)) throw LossError("bce_clamp_eps must lie in (0, 1e-2]");
    if (!(dice_smooth_eps > 0.0 && dice_smooth_eps <= 1.0)) throw LossError("dice_smooth_eps must lie in (0, 1]");
}

namespace {

void check_shapes(std::size_t a, std::size_t b, std::span<double> grad, const char* op) {
    if (a != b) throw LossError(std::string(op) + ": shape mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    if (!grad.empty() && grad.size() != a) throw LossError(std::string(op) + ": gradient buffer has the wrong size");
    if (a == 0) throw LossError(std::string(op) + ": empty input");
}

}  // namespace

double dice_loss(std::span<const double> pred, std::span<const double> target, double eps, std::span<double> grad) {
    check_shapes(pred.size(), target.size(), grad, "dice_loss");
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] * target[i];
        sum_p += pred[i];
        sum_t += target[i];
    }
    const double num = 2.0 * inter + eps;
    const double den = sum_p + sum_t + eps;
    if (!grad.empty()) {
        const double inv_den2 = 1.0 / (den * den);
        for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = -(2.0 * target[i] * den - num) * inv_den2;
    }
    return 1.0 - num / den;
}

double bce_loss(std::span<const double> pred, std::span<const double> target, double eps, std::span<double> grad) {
    check_shapes(pred.size(), target.size(), grad, "bce_loss");
    const double n = static_cast<double>(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], eps, 1.0 - eps);
        const double t = target[i];
        acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        if (!grad.empty()) {
            // Zero slope where the clamp is active.
            const bool clamped = pred[i] < eps || pred[i] > 1.0 - eps;
            grad[i] = clamped ? 0.0 : (-t / p + (1.0 - t) / (1.0 - p)) / n;
        }
    }
    return acc / n;
}

double masked_mse(std::span<const double> pred, std::span<const double> target, const BinaryMask& roi,
                  std::span<double> grad) {
    check_shapes(pred.size(), target.size(), grad, "masked_mse");
    if (roi.size() != pred.size()) throw LossError("masked_mse: ROI shape mismatch");
    if (roi.empty()) throw LossError("masked_mse: empty ROI");
    const double inv = 1.0 / static_cast<double>(roi.count());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!roi[i]) {
            if (!grad.empty()) grad[i] = 0.0;
            continue;
        }
        const double diff = pred[i] - target[i];
        acc += diff * diff;
        if (!grad.empty()) grad[i] = 2.0 * diff * inv;
    }
    return acc * inv;
}

CombinedLoss combined_loss(std::span<const double> seg_pred, std::span<const double> seg_target,
                           std::span<const double> reg_pred, std::span<const double> reg_target,
                           const BinaryMask& skull, const LossConfig& cfg) {
    cfg.validate();
    CombinedLoss out;
    out.grad_seg.assign(seg_pred.size(), 0.0);
    out.grad_reg.assign(reg_pred.size(), 0.0);
    std::vector<double> g(seg_pred.size());

    out.parts.dice = dice_loss(seg_pred, seg_target, cfg.dice_smooth_eps, g);
    for (std::size_t i = 0; i < g.size(); ++i) out.grad_seg[i] = (1.0 - cfg.lambda) * g[i];
    out.parts.bce = bce_loss(seg_pred, seg_target, cfg.bce_clamp_eps, g);
    for (std::size_t i = 0; i < g.size(); ++i) out.grad_seg[i] += cfg.lambda * g[i];

    const BinaryMask roi = dilate(skull, cfg.dilation_d, cfg.connectivity);
    out.parts.mse = masked_mse(reg_pred, reg_target, roi, out.grad_reg);

    out.parts.total = (1.0 - cfg.lambda) * out.parts.dice + cfg.lambda * out.parts.bce + out.parts.mse;
    return out;
}

nlohmann::ordered_json log_record(std::size_t step, const LossParts& parts, const LossConfig& cfg) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["dice"] = parts.dice;
    j["bce"] = parts.bce;
    j["mse"] = parts.mse;
    j["total"] = parts.total;
    j["lambda"] = cfg.lambda;
    j["d"] = cfg.dilation_d;
    return j;
}

}  // namespace sct::loss
