#include "sct/nn/model.hpp"

#include <cmath>

#include "sct/core/rng.hpp"
#include "sct/nn/layers.hpp"

namespace sct::nn {

namespace {

constexpr int kKernel = 3;
constexpr std::size_t kTaps = 27;

int down_out_width(const ModelDescriptor& d, int l) { return d.widths[std::min(l + 1, d.levels() - 1)]; }

int up_in_width(const ModelDescriptor& d, int l) {
    const int prev = l == d.levels() - 1 ? d.widths.back() : d.widths[l + 1];
    return prev + d.widths[l];
}

}  // namespace

void ModelDescriptor::validate() const {
    if (in_channels < 1) throw ModelError("descriptor: in_channels must be positive");
    if (widths.empty()) throw ModelError("descriptor: at least one level is required");
    for (int w : widths)
        if (w < 1) throw ModelError("descriptor: widths must be positive");
    if (heads < 1 || embed_dim < 2 || embed_dim % 2 != 0 || embed_dim % heads != 0)
        throw ModelError("descriptor: embed_dim must be even and divisible by heads");
    const int div = 1 << levels();
    if (patch < div || patch % div != 0)
        throw ModelError("descriptor: patch side " + std::to_string(patch) + " must be divisible by 2^levels = " +
                         std::to_string(div));
}

std::size_t ModelDescriptor::parameter_count() const {
    validate();
    const std::size_t L = widths.size();
    const auto w = [&](std::size_t i) { return static_cast<std::size_t>(widths[i]); };
    const auto e = static_cast<std::size_t>(embed_dim);
    std::size_t n = kTaps * static_cast<std::size_t>(in_channels) * w(0) + w(0);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t out = w(std::min(l + 1, L - 1));
        n += kTaps * w(l) * out + out;
    }
    n += 2 * w(L - 1) * e + e + w(L - 1) + 4 * (e * e + e);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t prev = l == L - 1 ? w(L - 1) : w(l + 1);
        n += kTaps * (prev + w(l)) * w(l) + w(l);
    }
    n += 2 * (w(0) + 1);
    return n;
}

nlohmann::ordered_json to_json(const ModelDescriptor& d) {
    nlohmann::ordered_json j;
    j["in_channels"] = d.in_channels;
    j["widths"] = d.widths;
    j["heads"] = d.heads;
    j["embed_dim"] = d.embed_dim;
    j["patch"] = d.patch;
    j["seed"] = d.seed;
    return j;
}

ModelDescriptor descriptor_from_json(const nlohmann::json& j) {
    ModelDescriptor d;
    try {
        d.in_channels = j.at("in_channels").get<int>();
        d.widths = j.at("widths").get<std::vector<int>>();
        d.heads = j.at("heads").get<int>();
        d.embed_dim = j.at("embed_dim").get<int>();
        d.patch = j.at("patch").get<int>();
        d.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model descriptor: ") + e.what());
    }
    d.validate();
    return d;
}

void ModelParams::visit(const std::function<void(const std::string&, Tensor&)>& fn) {
    const auto conv = [&](const std::string& name, ConvParams& c) {
        fn(name + ".weight", c.weight);
        fn(name + ".bias", c.bias);
    };
    const auto lin = [&](const std::string& name, LinearParams& c) {
        fn(name + ".weight", c.weight);
        fn(name + ".bias", c.bias);
    };
    conv("stem", stem);
    for (std::size_t l = 0; l < down.size(); ++l) conv("down" + std::to_string(l), down[l]);
    lin("proj_in", proj_in);
    lin("attention.query", attention.query);
    lin("attention.key", attention.key);
    lin("attention.value", attention.value);
    lin("attention.output", attention.output);
    lin("proj_out", proj_out);
    for (std::size_t l = 0; l < up.size(); ++l) conv("up" + std::to_string(l), up[l]);
    conv("seg_head", seg_head);
    conv("reg_head", reg_head);
}

void ModelParams::visit(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    const_cast<ModelParams*>(this)->visit([&](const std::string& name, Tensor& t) { fn(name, t); });
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z = *this;
    z.visit([](const std::string&, Tensor& t) { t.fill(0.0); });
    return z;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
    if (!(a.desc == b.desc)) return false;
    std::vector<const Tensor*> ta, tb;
    a.visit([&](const std::string&, const Tensor& t) { ta.push_back(&t); });
    b.visit([&](const std::string&, const Tensor& t) { tb.push_back(&t); });
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!(*ta[i] == *tb[i])) return false;
    return true;
}

namespace {

ConvParams make_conv(int cin, int cout, int k) {
    return {Tensor({cout, cin, k, k, k}), Tensor({cout})};
}

LinearParams make_linear(int in, int out) { return {Tensor({out, in}), Tensor({out})}; }

void init_uniform(Tensor& w, double bound, Rng& rng) {
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
}

}  // namespace

ModelParams build_model(const ModelDescriptor& desc) {
    desc.validate();
    const int L = desc.levels();
    const int e = desc.embed_dim;
    ModelParams m;
    m.desc = desc;
    m.stem = make_conv(desc.in_channels, desc.widths[0], kKernel);
    for (int l = 0; l < L; ++l) m.down.push_back(make_conv(desc.widths[l], down_out_width(desc, l), kKernel));
    m.proj_in = make_linear(desc.widths.back(), e);
    m.attention = {make_linear(e, e), make_linear(e, e), make_linear(e, e), make_linear(e, e), desc.heads};
    m.proj_out = make_linear(e, desc.widths.back());
    for (int l = 0; l < L; ++l) m.up.push_back(make_conv(up_in_width(desc, l), desc.widths[l], kKernel));
    m.seg_head = make_conv(desc.widths[0], 1, 1);
    m.reg_head = make_conv(desc.widths[0], 1, 1);

    Rng rng(desc.seed);
    m.visit([&](const std::string& name, Tensor& t) {
        if (t.rank() == 1) return;  // biases start at zero
        const double fan_in = static_cast<double>(t.size() / static_cast<std::size_t>(t.dim(0)));
        const bool feeds_relu = t.rank() == 5 && name.rfind("seg_head", 0) != 0 && name.rfind("reg_head", 0) != 0;
        init_uniform(t, std::sqrt((feeds_relu ? 6.0 : 1.0) / fan_in), rng);
    });
    return m;
}

ModelOutput forward(const ModelParams& m, const Tensor& x, ForwardCache* cache) {
    const ModelDescriptor& d = m.desc;
    const int L = d.levels();
    const int p = d.patch;
    if (x.rank() != 5 || x.dim(1) != d.in_channels || x.dim(2) != p || x.dim(3) != p || x.dim(4) != p)
        throw ShapeError("forward: expected input [N, " + std::to_string(d.in_channels) + ", " + std::to_string(p) +
                         ", " + std::to_string(p) + ", " + std::to_string(p) + "], got " + x.shape_string());

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.input = x;

    c.stem_pre = conv3d_forward(x, m.stem.weight, m.stem.bias, 1, 1);
    c.skips.push_back(relu_forward(c.stem_pre));
    for (int l = 0; l < L; ++l) {
        c.down_pre.push_back(conv3d_forward(c.skips.back(), m.down[l].weight, m.down[l].bias, 2, 1));
        Tensor act = relu_forward(c.down_pre.back());
        if (l + 1 < L) c.skips.push_back(std::move(act));
        else c.bottleneck = std::move(act);
    }

    const int side = d.bottleneck_side();
    c.tokens_in = to_tokens(c.bottleneck);
    c.tokens_mid = linear_forward(c.tokens_in, m.proj_in.weight, m.proj_in.bias);
    const Tensor pe = positional_encoding(d.tokens(), d.embed_dim);
    const std::size_t per_item = pe.size();
    for (std::size_t i = 0; i < c.tokens_mid.size(); ++i) c.tokens_mid[i] += pe[i % per_item];
    c.tokens_out = attention_forward(m.attention, c.tokens_mid, &c.attention);
    add_inplace(c.tokens_out, c.tokens_mid);
    Tensor h = from_tokens(linear_forward(c.tokens_out, m.proj_out.weight, m.proj_out.bias), side, side, side);

    c.up_cat.resize(L);
    c.up_pre.resize(L);
    for (int l = L - 1; l >= 0; --l) {
        c.up_cat[l] = concat_channels(upsample2_forward(h), c.skips[l]);
        c.up_pre[l] = conv3d_forward(c.up_cat[l], m.up[l].weight, m.up[l].bias, 1, 1);
        h = relu_forward(c.up_pre[l]);
    }
    c.head_in = std::move(h);

    ModelOutput out;
    out.seg = sigmoid_forward(conv3d_forward(c.head_in, m.seg_head.weight, m.seg_head.bias, 1, 0));
    out.reg = conv3d_forward(c.head_in, m.reg_head.weight, m.reg_head.bias, 1, 0);
    c.seg = out.seg;
    c.valid = true;
    return out;
}

BackwardResult backward(const ModelParams& m, const ForwardCache& c, const Tensor& dseg, const Tensor& dreg) {
    if (!c.valid) throw ModelError("backward: missing forward cache");
    const ModelDescriptor& d = m.desc;
    const int L = d.levels();
    expect_shape(dseg, c.seg.shape(), "backward seg gradient");
    expect_shape(dreg, c.seg.shape(), "backward reg gradient");

    BackwardResult r{m.zeros_like(), {}};
    ModelParams& g = r.grads;

    auto reg_g = conv3d_backward(c.head_in, m.reg_head.weight, 1, 0, dreg);
    g.reg_head = {std::move(reg_g.dweight), std::move(reg_g.dbias)};
    auto seg_g = conv3d_backward(c.head_in, m.seg_head.weight, 1, 0, sigmoid_backward(c.seg, dseg));
    g.seg_head = {std::move(seg_g.dweight), std::move(seg_g.dbias)};
    Tensor dh = std::move(reg_g.dx);
    add_inplace(dh, seg_g.dx);

    std::vector<Tensor> dskips(c.skips.size());
    for (int l = 0; l < L; ++l) {
        auto cg = conv3d_backward(c.up_cat[l], m.up[l].weight, 1, 1, relu_backward(c.up_pre[l], dh));
        g.up[l] = {std::move(cg.dweight), std::move(cg.dbias)};
        const int prev_channels = c.up_cat[l].dim(1) - d.widths[l];
        auto [dup, dskip] = split_channels(cg.dx, prev_channels);
        dskips[l] = std::move(dskip);
        dh = upsample2_backward(dup);
    }

    // dh is now the gradient of the bottleneck feature map after proj_out.
    auto po = linear_backward(c.tokens_out, m.proj_out.weight, to_tokens(dh));
    g.proj_out = {std::move(po.dweight), std::move(po.dbias)};
    auto ag = attention_backward(m.attention, c.attention, po.dx);
    g.attention = std::move(ag.dparams);
    Tensor dmid = std::move(po.dx);
    add_inplace(dmid, ag.dx);
    auto pi = linear_backward(c.tokens_in, m.proj_in.weight, dmid);
    g.proj_in = {std::move(pi.dweight), std::move(pi.dbias)};
    const int side = d.bottleneck_side();
    Tensor dact = from_tokens(pi.dx, side, side, side);

    for (int l = L - 1; l >= 0; --l) {
        auto cg = conv3d_backward(c.skips[l], m.down[l].weight, 2, 1, relu_backward(c.down_pre[l], dact));
        g.down[l] = {std::move(cg.dweight), std::move(cg.dbias)};
        dact = std::move(cg.dx);
        add_inplace(dact, dskips[l]);
    }

    auto sg = conv3d_backward(c.input, m.stem.weight, 1, 1, relu_backward(c.stem_pre, dact));
    g.stem = {std::move(sg.dweight), std::move(sg.dbias)};
    r.dinput = std::move(sg.dx);
    return r;
}

}  // namespace sct::nn
