#include "sct/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sct/core/rng.hpp"
#include "sct/loss/loss.hpp"
#include "sct/nn/attention.hpp"
#include "sct/nn/layers.hpp"
#include "sct/nn/model.hpp"

namespace sct::nn {

GradCheckResult check_gradient(const std::string& name, std::span<double> x, std::span<const double> analytic,
                               const std::function<double()>& f, const GradCheckOptions& opt) {
    if (x.size() != analytic.size()) throw ShapeError("check_gradient: " + name + " gradient size mismatch");
    GradCheckResult r{name, x.size(), 0.0, 0.0, true};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + opt.step;
        const double up = f();
        x[i] = saved - opt.step;
        const double down = f();
        x[i] = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        const double err = std::abs(numeric - analytic[i]);
        r.max_abs_error = std::max(r.max_abs_error, err);
        if (err <= opt.abs_floor) continue;
        const double rel = err / std::max(std::abs(numeric), std::abs(analytic[i]));
        r.max_rel_error = std::max(r.max_rel_error, rel);
        if (rel > opt.rel_tol) r.passed = false;
    }
    return r;
}

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Random values kept away from the ReLU kink so central differences stay on one side.
Tensor off_kink(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
        const double m = rng.uniform(0.05, 1.0);
        v = rng.uniform01() < 0.5 ? -m : m;
    }
    return t;
}

LinearParams random_linear(int out, int in, Rng& rng) {
    return {random_tensor({out, in}, rng, -0.5, 0.5), random_tensor({out}, rng, -0.1, 0.1)};
}

void check_model(std::vector<GradCheckResult>& out, const GradCheckOptions& opt, Rng& rng) {
    ModelDescriptor d;
    d.in_channels = 2;
    d.widths = {4, 8};
    d.heads = 2;
    d.embed_dim = 8;
    d.patch = 8;
    d.seed = opt.seed;
    ModelParams m = build_model(d);

    Tensor x = random_tensor({1, 2, 8, 8, 8}, rng, 0.0, 1.0);
    std::vector<std::uint8_t> bits(512);
    Tensor seg_target({1, 1, 8, 8, 8}), reg_target = random_tensor({1, 1, 8, 8, 8}, rng, 0.0, 1.0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bits[i] = rng.uniform01() < 0.3 ? 1 : 0;
        seg_target[i] = bits[i];
    }
    const BinaryMask skull({8, 8, 8}, bits);
    const loss::LossConfig cfg;

    auto total = [&] {
        const ModelOutput y = forward(m, x);
        return loss::combined_loss(y.seg.values(), seg_target.values(), y.reg.values(), reg_target.values(), skull,
                                   cfg)
            .parts.total;
    };
    ForwardCache cache;
    const ModelOutput y = forward(m, x, &cache);
    const auto l = loss::combined_loss(y.seg.values(), seg_target.values(), y.reg.values(), reg_target.values(),
                                       skull, cfg);
    const Tensor dseg(y.seg.shape(), l.grad_seg), dreg(y.reg.shape(), l.grad_reg);
    BackwardResult g = backward(m, cache, dseg, dreg);

    std::vector<std::pair<std::string, const Tensor*>> grads;
    g.grads.visit([&](const std::string& name, const Tensor& t) { grads.emplace_back(name, &t); });
    std::size_t k = 0;
    m.visit([&](const std::string& name, Tensor& t) {
        out.push_back(check_gradient("model." + name, t.values(), grads[k++].second->values(), total, opt));
    });
    out.push_back(check_gradient("model.input", x.values(), g.dinput.values(), total, opt));
}

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(const GradCheckOptions& opt) {
    Rng rng(opt.seed);
    std::vector<GradCheckResult> out;

    for (const auto& [stride, pad] : {std::pair{1, 1}, std::pair{2, 1}}) {
        const std::string tag = "conv3d.s" + std::to_string(stride);
        Tensor x = random_tensor({2, 2, 4, 4, 4}, rng);
        Tensor w = random_tensor({3, 2, 3, 3, 3}, rng, -0.5, 0.5);
        Tensor b = random_tensor({3}, rng);
        const Tensor y0 = conv3d_forward(x, w, b, stride, pad);
        const Tensor r = random_tensor(y0.shape(), rng);
        auto f = [&] { return dot(r, conv3d_forward(x, w, b, stride, pad)); };
        const Conv3dGrads g = conv3d_backward(x, w, stride, pad, r);
        out.push_back(check_gradient(tag + ".x", x.values(), g.dx.values(), f, opt));
        out.push_back(check_gradient(tag + ".weight", w.values(), g.dweight.values(), f, opt));
        out.push_back(check_gradient(tag + ".bias", b.values(), g.dbias.values(), f, opt));
    }
    {
        Tensor x = off_kink({1, 2, 3, 3, 3}, rng);
        const Tensor r = random_tensor(x.shape(), rng);
        const Tensor dx = relu_backward(x, r);
        out.push_back(check_gradient("relu", x.values(), dx.values(), [&] { return dot(r, relu_forward(x)); }, opt));
    }
    {
        Tensor x = random_tensor({1, 2, 3, 3, 3}, rng, -4.0, 4.0);
        const Tensor r = random_tensor(x.shape(), rng);
        const Tensor dx = sigmoid_backward(sigmoid_forward(x), r);
        out.push_back(
            check_gradient("sigmoid", x.values(), dx.values(), [&] { return dot(r, sigmoid_forward(x)); }, opt));
    }
    {
        Tensor x = random_tensor({1, 2, 2, 3, 2}, rng);
        const Tensor r = random_tensor(upsample2_forward(x).shape(), rng);
        const Tensor dx = upsample2_backward(r);
        out.push_back(
            check_gradient("upsample2", x.values(), dx.values(), [&] { return dot(r, upsample2_forward(x)); }, opt));
    }
    {
        Tensor a = random_tensor({2, 2, 2, 2, 2}, rng), b = random_tensor({2, 3, 2, 2, 2}, rng);
        const Tensor r = random_tensor({2, 5, 2, 2, 2}, rng);
        const auto [da, db] = split_channels(r, 2);
        auto f = [&] { return dot(r, concat_channels(a, b)); };
        out.push_back(check_gradient("concat.a", a.values(), da.values(), f, opt));
        out.push_back(check_gradient("concat.b", b.values(), db.values(), f, opt));
    }
    {
        Tensor x = random_tensor({2, 3, 5}, rng);
        LinearParams p = random_linear(4, 5, rng);
        const Tensor r = random_tensor({2, 3, 4}, rng);
        const LinearGrads g = linear_backward(x, p.weight, r);
        auto f = [&] { return dot(r, linear_forward(x, p.weight, p.bias)); };
        out.push_back(check_gradient("linear.x", x.values(), g.dx.values(), f, opt));
        out.push_back(check_gradient("linear.weight", p.weight.values(), g.dweight.values(), f, opt));
        out.push_back(check_gradient("linear.bias", p.bias.values(), g.dbias.values(), f, opt));
    }
    {
        const int e = 8;
        AttentionParams p{random_linear(e, e, rng), random_linear(e, e, rng), random_linear(e, e, rng),
                          random_linear(e, e, rng), 2};
        Tensor x = random_tensor({2, 5, e}, rng);
        const Tensor r = random_tensor({2, 5, e}, rng);
        AttentionCache cache;
        attention_forward(p, x, &cache);
        const AttentionGrads g = attention_backward(p, cache, r);
        auto f = [&] { return dot(r, attention_forward(p, x)); };
        out.push_back(check_gradient("attention.x", x.values(), g.dx.values(), f, opt));
        const std::pair<const char*, std::pair<LinearParams*, const LinearParams*>> parts[] = {
            {"query", {&p.query, &g.dparams.query}},
            {"key", {&p.key, &g.dparams.key}},
            {"value", {&p.value, &g.dparams.value}},
            {"output", {&p.output, &g.dparams.output}}};
        for (const auto& [name, pg] : parts) {
            out.push_back(check_gradient(std::string("attention.") + name + ".weight", pg.first->weight.values(),
                                         pg.second->weight.values(), f, opt));
            out.push_back(check_gradient(std::string("attention.") + name + ".bias", pg.first->bias.values(),
                                         pg.second->bias.values(), f, opt));
        }
    }
    {
        const Dims3 dims{3, 3, 3};
        Tensor p = random_tensor({27}, rng, 0.05, 0.95);
        Tensor reg = random_tensor({27}, rng);
        Tensor t({27}), reg_t = random_tensor({27}, rng);
        std::vector<std::uint8_t> bits(27);
        for (std::size_t i = 0; i < 27; ++i) {
            bits[i] = rng.uniform01() < 0.4 ? 1 : 0;
            t[i] = bits[i];
        }
        bits[13] = 1;
        t[13] = 1.0;
        const BinaryMask roi(dims, bits);
        std::vector<double> g(27);

        loss::dice_loss(p.values(), t.values(), 1.0, g);
        out.push_back(check_gradient("loss.dice", p.values(), g,
                                     [&] { return loss::dice_loss(p.values(), t.values(), 1.0); }, opt));
        loss::bce_loss(p.values(), t.values(), 1e-7, g);
        out.push_back(check_gradient("loss.bce", p.values(), g,
                                     [&] { return loss::bce_loss(p.values(), t.values(), 1e-7); }, opt));
        loss::masked_mse(reg.values(), reg_t.values(), roi, g);
        out.push_back(check_gradient("loss.masked_mse", reg.values(), g,
                                     [&] { return loss::masked_mse(reg.values(), reg_t.values(), roi); }, opt));

        // Skull of one voxel so the dilated ROI is a strict subset of the patch.
        std::vector<std::uint8_t> one(27, 0);
        one[0] = 1;
        const BinaryMask skull(dims, one);
        const loss::LossConfig cfg;
        const auto c = loss::combined_loss(p.values(), t.values(), reg.values(), reg_t.values(), skull, cfg);
        auto f = [&] {
            return loss::combined_loss(p.values(), t.values(), reg.values(), reg_t.values(), skull, cfg).parts.total;
        };
        out.push_back(check_gradient("loss.combined.seg", p.values(), c.grad_seg, f, opt));
        out.push_back(check_gradient("loss.combined.reg", reg.values(), c.grad_reg, f, opt));
    }
    check_model(out, opt, rng);
    return out;
}

}  // namespace sct::nn
