#pragma once

#include "sct/nn/tensor.hpp"

namespace sct::nn {

struct LinearParams {
    Tensor weight;  ///< [out, in]
    Tensor bias;    ///< [out]
};

/// Multi-head self-attention over [N, T, E] tokens; E must be divisible by heads.
struct AttentionParams {
    LinearParams query;
    LinearParams key;
    LinearParams value;
    LinearParams output;
    int heads = 1;

    int embed_dim() const { return query.weight.dim(1); }
};

/// Activations kept by the forward pass for the backward pass.
struct AttentionCache {
    Tensor x;        ///< [N, T, E] input tokens
    Tensor q, k, v;  ///< [N, T, E] projections (heads are contiguous column blocks)
    Tensor probs;    ///< [N, heads, T, T] row-stochastic attention matrices
    Tensor context;  ///< [N, T, E] concatenated per-head outputs before the output projection
};

/// softmax(Q K^T / sqrt(E / heads)) V per head, heads concatenated, then the output projection.
Tensor attention_forward(const AttentionParams& p, const Tensor& tokens, AttentionCache* cache = nullptr);

struct AttentionGrads {
    Tensor dx;
    AttentionParams dparams;
};

AttentionGrads attention_backward(const AttentionParams& p, const AttentionCache& cache, const Tensor& dy);

/// Sinusoidal table [T, E]: even columns sin(t / 10000^(2i/E)), odd columns the matching cos.
Tensor positional_encoding(int tokens, int dim);

}  // namespace sct::nn
