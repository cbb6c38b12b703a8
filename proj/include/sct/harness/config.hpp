#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sct/harness/phantom.hpp"
#include "sct/loss/loss.hpp"
#include "sct/nn/optim.hpp"

namespace sct::harness {

/// Every knob of one experiment. Serialized as a single JSON document; missing keys keep
/// their defaults, so a partial document is a valid override.
struct ExperimentConfig {
    std::vector<std::string> modalities{"mr1", "mr2"};  ///< {"mr1"} or {"mr1", "mr2"}

    // Data
    std::size_t subjects = 10;
    Dims3 dims{32, 32, 32};
    int shell_thickness = 3;
    double noise_mr1 = 0.05;
    double noise_mr2 = 0.05;
    std::array<double, 3> split_ratios{0.8, 0.1, 0.1};

    // Patches
    int patch = 16;
    int step = 4;  ///< inference grid step
    std::size_t patches_per_subject = 100;
    double skull_fraction_seg = 0.8;
    double skull_fraction_reg = 1.0;

    // Model
    std::vector<int> widths{8, 16};
    int heads = 2;
    int embed_dim = 32;

    // Training
    loss::LossConfig loss;
    nn::AdamConfig adam;
    std::size_t steps = 2000;
    std::size_t batch = 1;

    // Inference
    double mask_threshold = 0.5;
    unsigned workers = 1;

    std::uint64_t seed = 0;

    /// Throws HarnessError naming the first violated constraint.
    void validate() const;

    int in_channels() const { return static_cast<int>(modalities.size()); }
    PhantomSpec phantom_spec(std::size_t subject_index) const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& c);
/// Starts from `base` and overrides every key present in `j`. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base = {});

/// "sub-01", "sub-02", ...
std::string subject_id(std::size_t index);

}  // namespace sct::harness
