#include "sct/nn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "sct/nn/layers.hpp"

namespace sct::nn {

namespace {

void check_params(const AttentionParams& p, const Tensor& tokens) {
    if (tokens.rank() != 3) throw ShapeError("attention: tokens must be [N, T, E], got " + tokens.shape_string());
    const int e = tokens.dim(2);
    if (p.heads < 1 || e % p.heads != 0)
        throw ShapeError("attention: embedding dim " + std::to_string(e) + " is not divisible by " +
                         std::to_string(p.heads) + " heads");
    for (const LinearParams* l : {&p.query, &p.key, &p.value, &p.output}) {
        expect_shape(l->weight, {e, e}, "attention projection weight");
        expect_shape(l->bias, {e}, "attention projection bias");
    }
}

}  // namespace

Tensor attention_forward(const AttentionParams& p, const Tensor& tokens, AttentionCache* cache) {
    check_params(p, tokens);
    const int n = tokens.dim(0), t = tokens.dim(1), e = tokens.dim(2), heads = p.heads;
    const int dh = e / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor q = linear_forward(tokens, p.query.weight, p.query.bias);
    Tensor k = linear_forward(tokens, p.key.weight, p.key.bias);
    Tensor v = linear_forward(tokens, p.value.weight, p.value.bias);
    Tensor probs({n, heads, t, t});
    Tensor context({n, t, e});

    std::vector<double> row(static_cast<std::size_t>(t));
    for (int b = 0; b < n; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * t * e;
        for (int hd = 0; hd < heads; ++hd) {
            const int c0 = hd * dh;
            double* pm = probs.data() + (static_cast<std::size_t>(b) * heads + hd) * t * t;
            for (int i = 0; i < t; ++i) {
                const double* qi = q.data() + base + static_cast<std::size_t>(i) * e + c0;
                double mx = -INFINITY;
                for (int j = 0; j < t; ++j) {
                    const double* kj = k.data() + base + static_cast<std::size_t>(j) * e + c0;
                    double s = 0.0;
                    for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
                    row[j] = s * scale;
                    mx = std::max(mx, row[j]);
                }
                double z = 0.0;
                for (int j = 0; j < t; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    z += row[j];
                }
                double* ci = context.data() + base + static_cast<std::size_t>(i) * e + c0;
                for (int j = 0; j < t; ++j) {
                    const double a = row[j] / z;
                    pm[static_cast<std::size_t>(i) * t + j] = a;
                    const double* vj = v.data() + base + static_cast<std::size_t>(j) * e + c0;
                    for (int c = 0; c < dh; ++c) ci[c] += a * vj[c];
                }
            }
        }
    }

    Tensor out = linear_forward(context, p.output.weight, p.output.bias);
    if (cache) {
        cache->x = tokens;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->probs = std::move(probs);
        cache->context = std::move(context);
    }
    return out;
}

AttentionGrads attention_backward(const AttentionParams& p, const AttentionCache& cache, const Tensor& dy) {
    if (cache.probs.empty()) throw ShapeError("attention_backward: missing forward cache");
    check_params(p, cache.x);
    expect_shape(dy, cache.x.shape(), "attention upstream gradient");
    const int n = cache.x.dim(0), t = cache.x.dim(1), e = cache.x.dim(2), heads = p.heads;
    const int dh = e / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    AttentionGrads g;
    g.dparams.heads = heads;
    auto out_grads = linear_backward(cache.context, p.output.weight, dy);
    g.dparams.output = {std::move(out_grads.dweight), std::move(out_grads.dbias)};
    const Tensor& dctx = out_grads.dx;

    Tensor dq(cache.q.shape()), dk(cache.k.shape()), dv(cache.v.shape());
    std::vector<double> dp(static_cast<std::size_t>(t));
    for (int b = 0; b < n; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * t * e;
        for (int hd = 0; hd < heads; ++hd) {
            const int c0 = hd * dh;
            const double* pm = cache.probs.data() + (static_cast<std::size_t>(b) * heads + hd) * t * t;
            for (int i = 0; i < t; ++i) {
                const double* gi = dctx.data() + base + static_cast<std::size_t>(i) * e + c0;
                const double* prow = pm + static_cast<std::size_t>(i) * t;
                double dot = 0.0;
                for (int j = 0; j < t; ++j) {
                    const double* vj = cache.v.data() + base + static_cast<std::size_t>(j) * e + c0;
                    double* dvj = dv.data() + base + static_cast<std::size_t>(j) * e + c0;
                    double s = 0.0;
                    for (int c = 0; c < dh; ++c) {
                        s += gi[c] * vj[c];
                        dvj[c] += prow[j] * gi[c];
                    }
                    dp[j] = s;
                    dot += prow[j] * s;
                }
                const double* qi = cache.q.data() + base + static_cast<std::size_t>(i) * e + c0;
                double* dqi = dq.data() + base + static_cast<std::size_t>(i) * e + c0;
                for (int j = 0; j < t; ++j) {
                    const double ds = prow[j] * (dp[j] - dot) * scale;
                    const double* kj = cache.k.data() + base + static_cast<std::size_t>(j) * e + c0;
                    double* dkj = dk.data() + base + static_cast<std::size_t>(j) * e + c0;
                    for (int c = 0; c < dh; ++c) {
                        dqi[c] += ds * kj[c];
                        dkj[c] += ds * qi[c];
                    }
                }
            }
        }
    }

    auto gq = linear_backward(cache.x, p.query.weight, dq);
    auto gk = linear_backward(cache.x, p.key.weight, dk);
    auto gv = linear_backward(cache.x, p.value.weight, dv);
    g.dx = std::move(gq.dx);
    add_inplace(g.dx, gk.dx);
    add_inplace(g.dx, gv.dx);
    g.dparams.query = {std::move(gq.dweight), std::move(gq.dbias)};
    g.dparams.key = {std::move(gk.dweight), std::move(gk.dbias)};
    g.dparams.value = {std::move(gv.dweight), std::move(gv.dbias)};
    return g;
}

Tensor positional_encoding(int tokens, int dim) {
    if (tokens < 1) throw ShapeError("positional_encoding: need at least one token");
    if (dim < 2 || dim % 2 != 0) throw ShapeError("positional_encoding: embedding dim must be even");
    Tensor pe({tokens, dim});
    for (int pos = 0; pos < tokens; ++pos)
        for (int i = 0; i < dim / 2; ++i) {
            const double freq = std::pow(10000.0, -2.0 * i / dim);
            pe[static_cast<std::size_t>(pos) * dim + 2 * i] = std::sin(pos * freq);
            pe[static_cast<std::size_t>(pos) * dim + 2 * i + 1] = std::cos(pos * freq);
        }
    return pe;
}

}  // namespace sct::nn
