#include "sct/nn/optim.hpp"

#include <cmath>

namespace sct::nn {

OptimState make_optimizer(const ModelParams& params, const AdamConfig& cfg) {
    OptimState s;
    s.cfg = cfg;
    params.visit([&](const std::string&, const Tensor& t) {
        s.m.push_back(t.zeros_like());
        s.v.push_back(t.zeros_like());
    });
    return s;
}

void optimizer_step(ModelParams& params, const ModelParams& grads, OptimState& state) {
    std::vector<const Tensor*> g;
    grads.visit([&](const std::string&, const Tensor& t) { g.push_back(&t); });
    if (g.size() != state.m.size() || g.size() != state.v.size())
        throw ShapeError("optimizer_step: gradient/moment count does not match the parameters");

    ++state.step;
    const auto& c = state.cfg;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);

    std::size_t k = 0;
    params.visit([&](const std::string& name, Tensor& p) {
        const Tensor& gk = *g[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        ++k;
        if (gk.shape() != p.shape() || m.shape() != p.shape() || v.shape() != p.shape())
            throw ShapeError("optimizer_step: shape mismatch for " + name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gk[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gk[i] * gk[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    });
}

}  // namespace sct::nn
