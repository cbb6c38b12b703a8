#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "sct/loss/loss.hpp"
#include "sct/nn/model.hpp"
#include "sct/nn/optim.hpp"
#include "sct/volume/volume.hpp"

namespace sct::nn {

/// One training patch. `input` holds the MR channels [1, C, P, P, P]; `mask` is the
/// binary skull label and `ct` the normalized CT target, both [1, 1, P, P, P].
struct TrainingSample {
    Tensor input;
    Tensor mask;
    Tensor ct;
    BinaryMask skull;  ///< same labels as `mask`, used to build the regression ROI
};

/// The two pipelines draw from separately sampled patch pools.
struct TrainingSet {
    std::vector<TrainingSample> segmentation;
    std::vector<TrainingSample> regression;
};

struct TrainConfig {
    loss::LossConfig loss;
    AdamConfig adam;
    std::size_t steps = 0;
    std::size_t batch = 1;
    std::uint64_t seed = 0;
};

struct TrainResult {
    ModelParams seg;
    ModelParams reg;
    std::vector<loss::LossParts> log;  ///< one entry per step
};

/// Regression pipeline input: MR channels followed by the mask channel.
Tensor regression_input(const Tensor& mr, const Tensor& mask);

/// Stack [1, C, ...] samples into [N, C, ...].
Tensor stack_batch(const std::vector<const Tensor*>& items);

/// Joint optimisation of the segmentation model (MR -> skull probability, Dice + BCE) and the
/// regression model (MR + mask -> normalized CT, ROI-restricted MSE) on the combined loss.
/// Each step draws `batch` samples per pipeline from seeded epoch permutations, runs
/// forward -> combined_loss -> backward -> Adam on both models, and appends one JSON line
/// per step to `log_jsonl` when given.
TrainResult train_loop(ModelParams seg, ModelParams reg, const TrainingSet& data, const TrainConfig& cfg,
                       std::ostream* log_jsonl = nullptr);

}  // namespace sct::nn
