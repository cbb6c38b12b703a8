#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "sct/nn/attention.hpp"
#include "sct/nn/tensor.hpp"

namespace sct::nn {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Architecture of the toy Transformer U-Net.
///
/// With L = widths.size() levels and P the patch side:
///   stem     conv3 (in_channels -> w0), ReLU                 at P
///   down[l]  conv3 stride 2 (w_l -> w_{min(l+1, L-1)}), ReLU at P / 2^(l+1)
///   tokens   of the P / 2^L grid, linear w_{L-1} -> E, plus sinusoidal positions,
///            residual multi-head self-attention, linear E -> w_{L-1}
///   up[l]    x2 nearest upsampling, concat skip l, conv3 -> w_l, ReLU (l = L-1 .. 0)
///   heads    two 1x1x1 convs w0 -> 1; the segmentation head is followed by a sigmoid
///
/// Parameter count:
///   27 C w0 + w0
/// + sum_l (27 w_l w'_l + w'_l)                     w'_l = w_{min(l+1, L-1)}
/// + 2 (w_{L-1} E) + E + w_{L-1} + 4 (E^2 + E)
/// + sum_l (27 (c_l + w_l) w_l + w_l)               c_l = w_{l+1}, c_{L-1} = w_{L-1}
/// + 2 (w0 + 1)
struct ModelDescriptor {
    int in_channels = 2;
    std::vector<int> widths{8, 16};
    int heads = 2;
    int embed_dim = 32;
    int patch = 16;
    std::uint64_t seed = 0;

    int levels() const { return static_cast<int>(widths.size()); }
    int bottleneck_side() const { return patch >> levels(); }
    int tokens() const { return bottleneck_side() * bottleneck_side() * bottleneck_side(); }

    /// Throws ModelError when the patch is not divisible by 2^L or E is not divisible by heads.
    void validate() const;
    std::size_t parameter_count() const;

    friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

nlohmann::ordered_json to_json(const ModelDescriptor& d);
ModelDescriptor descriptor_from_json(const nlohmann::json& j);

struct ConvParams {
    Tensor weight;
    Tensor bias;
};

struct ModelParams {
    ModelDescriptor desc;
    ConvParams stem;
    std::vector<ConvParams> down;
    LinearParams proj_in;
    AttentionParams attention;
    LinearParams proj_out;
    std::vector<ConvParams> up;
    ConvParams seg_head;
    ConvParams reg_head;

    /// Visits every learnable tensor in a fixed order with a stable name.
    void visit(const std::function<void(const std::string&, Tensor&)>& fn);
    void visit(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    std::size_t parameter_count() const;
    /// Same structure with every tensor zeroed.
    ModelParams zeros_like() const;

    friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// Deterministic initialization from desc.seed: uniform weights with fan-in scaling
/// (sqrt(6 / fan_in) ahead of a ReLU, sqrt(1 / fan_in) otherwise), zero biases.
ModelParams build_model(const ModelDescriptor& desc);

struct ModelOutput {
    Tensor seg;  ///< [N, 1, P, P, P] probabilities
    Tensor reg;  ///< [N, 1, P, P, P] unbounded regression
};

/// Activations of one forward pass, consumed by backward().
struct ForwardCache {
    Tensor input;
    Tensor stem_pre;
    std::vector<Tensor> skips;     ///< post-ReLU encoder outputs, level 0 .. L-1
    std::vector<Tensor> down_pre;  ///< pre-ReLU strided conv outputs
    Tensor bottleneck;             ///< post-ReLU output of the last strided conv
    Tensor tokens_in;
    Tensor tokens_mid;  ///< after the input projection plus positions
    AttentionCache attention;
    Tensor tokens_out;  ///< after the residual attention
    std::vector<Tensor> up_cat;  ///< decoder conv inputs, indexed by level
    std::vector<Tensor> up_pre;  ///< decoder conv outputs before ReLU
    Tensor head_in;
    Tensor seg;
    bool valid = false;
};

ModelOutput forward(const ModelParams& m, const Tensor& x, ForwardCache* cache = nullptr);

struct BackwardResult {
    ModelParams grads;
    Tensor dinput;
};

/// Reverse-mode gradients of <dseg, seg> + <dreg, reg>. Throws ModelError without a valid cache.
BackwardResult backward(const ModelParams& m, const ForwardCache& cache, const Tensor& dseg, const Tensor& dreg);

}  // namespace sct::nn
