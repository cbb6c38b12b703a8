#pragma once

#include <cstdint>
#include <vector>

#include "sct/nn/model.hpp"

namespace sct::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam moments mirroring a ModelParams in visit() order.
struct OptimState {
    AdamConfig cfg;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t step = 0;
};

OptimState make_optimizer(const ModelParams& params, const AdamConfig& cfg = {});

/// One bias-corrected Adam update. Throws ShapeError when grads or moments do not mirror params.
void optimizer_step(ModelParams& params, const ModelParams& grads, OptimState& state);

}  // namespace sct::nn
