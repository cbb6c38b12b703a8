#include "sct/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace sct::nn {

namespace {

struct ConvGeometry {
    int n, cin, cout, k, stride, pad;
    int d, h, w;     // input extent
    int od, oh, ow;  // output extent

    std::size_t in_plane() const { return static_cast<std::size_t>(d) * h * w; }
    std::size_t out_plane() const { return static_cast<std::size_t>(od) * oh * ow; }
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& weight, int stride, int pad) {
    if (x.rank() != 5) throw ShapeError("conv3d: input must be [N, C, D, H, W], got " + x.shape_string());
    if (weight.rank() != 5 || weight.dim(2) != weight.dim(3) || weight.dim(2) != weight.dim(4))
        throw ShapeError("conv3d: weight must be [Cout, Cin, k, k, k], got " + weight.shape_string());
    if (weight.dim(1) != x.dim(1))
        throw ShapeError("conv3d: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                         std::to_string(weight.dim(1)));
    if (stride < 1 || pad < 0) throw ShapeError("conv3d: invalid stride/pad");
    ConvGeometry g{x.dim(0), x.dim(1), weight.dim(0), weight.dim(2), stride, pad,
                   x.dim(2), x.dim(3), x.dim(4), 0, 0, 0};
    g.od = (g.d + 2 * pad - g.k) / stride + 1;
    g.oh = (g.h + 2 * pad - g.k) / stride + 1;
    g.ow = (g.w + 2 * pad - g.k) / stride + 1;
    if (g.od < 1 || g.oh < 1 || g.ow < 1) throw ShapeError("conv3d: kernel larger than padded input");
    return g;
}

// Output indices o with 0 <= o * stride - pad + koff < in, as a half-open range.
struct Range {
    int lo, hi;
};

Range valid_outputs(int in, int out, int koff, int stride, int pad) {
    const int lo_num = pad - koff;
    const int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
    const int hi_num = in - 1 + pad - koff;
    const int hi = hi_num < 0 ? 0 : std::min(out, hi_num / stride + 1);
    return {lo, std::max(lo, hi)};
}

// Visits every (kernel tap, output row) pair of one input/output channel plane. The
// callback receives the input row start, the output row start, the tap index and the
// number of contiguous outputs; consecutive inputs are `stride` apart.
template <typename RowFn>
void for_each_tap_row(const ConvGeometry& g, RowFn&& row) {
    const int k = g.k;
    for (int kz = 0; kz < k; ++kz) {
        const Range rz = valid_outputs(g.d, g.od, kz, g.stride, g.pad);
        for (int ky = 0; ky < k; ++ky) {
            const Range ry = valid_outputs(g.h, g.oh, ky, g.stride, g.pad);
            for (int kx = 0; kx < k; ++kx) {
                const Range rx = valid_outputs(g.w, g.ow, kx, g.stride, g.pad);
                if (rx.hi <= rx.lo) continue;
                const int tap = (kz * k + ky) * k + kx;
                const int count = rx.hi - rx.lo;
                const int ix0 = rx.lo * g.stride - g.pad + kx;
                for (int oz = rz.lo; oz < rz.hi; ++oz) {
                    const int iz = oz * g.stride - g.pad + kz;
                    for (int oy = ry.lo; oy < ry.hi; ++oy) {
                        const int iy = oy * g.stride - g.pad + ky;
                        const std::size_t in_off = (static_cast<std::size_t>(iz) * g.h + iy) * g.w + ix0;
                        const std::size_t out_off = (static_cast<std::size_t>(oz) * g.oh + oy) * g.ow + rx.lo;
                        row(in_off, out_off, tap, count);
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv3d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    const ConvGeometry g = conv_geometry(x, weight, stride, pad);
    expect_shape(bias, {g.cout}, "conv3d bias");
    Tensor y({g.n, g.cout, g.od, g.oh, g.ow});
    const std::size_t taps = static_cast<std::size_t>(g.k) * g.k * g.k;
    const int s = g.stride;
    for (int n = 0; n < g.n; ++n)
        for (int oc = 0; oc < g.cout; ++oc) {
            double* yp = y.data() + (static_cast<std::size_t>(n) * g.cout + oc) * g.out_plane();
            std::fill(yp, yp + g.out_plane(), bias[oc]);
            for (int ic = 0; ic < g.cin; ++ic) {
                const double* xp = x.data() + (static_cast<std::size_t>(n) * g.cin + ic) * g.in_plane();
                const double* wp = weight.data() + (static_cast<std::size_t>(oc) * g.cin + ic) * taps;
                for_each_tap_row(g, [&](std::size_t in_off, std::size_t out_off, int tap, int count) {
                    const double wv = wp[tap];
                    const double* xr = xp + in_off;
                    double* yr = yp + out_off;
                    if (s == 1) {
                        for (int i = 0; i < count; ++i) yr[i] += wv * xr[i];
                    } else {
                        for (int i = 0; i < count; ++i) yr[i] += wv * xr[i * s];
                    }
                });
            }
        }
    return y;
}

Conv3dGrads conv3d_backward(const Tensor& x, const Tensor& weight, int stride, int pad, const Tensor& dy,
                            bool need_dx) {
    const ConvGeometry g = conv_geometry(x, weight, stride, pad);
    expect_shape(dy, {g.n, g.cout, g.od, g.oh, g.ow}, "conv3d upstream gradient");
    Conv3dGrads out{need_dx ? x.zeros_like() : Tensor{}, weight.zeros_like(), Tensor({g.cout})};
    const std::size_t taps = static_cast<std::size_t>(g.k) * g.k * g.k;
    const int s = g.stride;
    for (int n = 0; n < g.n; ++n)
        for (int oc = 0; oc < g.cout; ++oc) {
            const double* gp = dy.data() + (static_cast<std::size_t>(n) * g.cout + oc) * g.out_plane();
            double db = 0.0;
            for (std::size_t i = 0; i < g.out_plane(); ++i) db += gp[i];
            out.dbias[oc] += db;
            for (int ic = 0; ic < g.cin; ++ic) {
                const double* xp = x.data() + (static_cast<std::size_t>(n) * g.cin + ic) * g.in_plane();
                const double* wp = weight.data() + (static_cast<std::size_t>(oc) * g.cin + ic) * taps;
                double* dwp = out.dweight.data() + (static_cast<std::size_t>(oc) * g.cin + ic) * taps;
                double* dxp = need_dx ? out.dx.data() + (static_cast<std::size_t>(n) * g.cin + ic) * g.in_plane()
                                      : nullptr;
                for_each_tap_row(g, [&](std::size_t in_off, std::size_t out_off, int tap, int count) {
                    const double* xr = xp + in_off;
                    const double* gr = gp + out_off;
                    double acc = 0.0;
                    if (s == 1) {
                        for (int i = 0; i < count; ++i) acc += gr[i] * xr[i];
                    } else {
                        for (int i = 0; i < count; ++i) acc += gr[i] * xr[i * s];
                    }
                    dwp[tap] += acc;
                    if (dxp) {
                        const double wv = wp[tap];
                        double* dxr = dxp + in_off;
                        if (s == 1) {
                            for (int i = 0; i < count; ++i) dxr[i] += wv * gr[i];
                        } else {
                            for (int i = 0; i < count; ++i) dxr[i * s] += wv * gr[i];
                        }
                    }
                });
            }
        }
    return out;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    expect_shape(dy, x.shape(), "relu upstream gradient");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(x[i] > 0.0)) dx[i] = 0.0;
    return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
    expect_shape(dy, y.shape(), "sigmoid upstream gradient");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
    return dx;
}

Tensor upsample2_forward(const Tensor& x) {
    if (x.rank() != 5) throw ShapeError("upsample2: expected [N, C, D, H, W]");
    const int nc = x.dim(0) * x.dim(1), d = x.dim(2), h = x.dim(3), w = x.dim(4);
    Tensor y({x.dim(0), x.dim(1), 2 * d, 2 * h, 2 * w});
    const int H = 2 * h, W = 2 * w;
    for (int c = 0; c < nc; ++c) {
        const double* xp = x.data() + static_cast<std::size_t>(c) * d * h * w;
        double* yp = y.data() + static_cast<std::size_t>(c) * 8 * d * h * w;
        for (int z = 0; z < 2 * d; ++z)
            for (int yy = 0; yy < H; ++yy) {
                const double* xr = xp + (static_cast<std::size_t>(z / 2) * h + yy / 2) * w;
                double* yr = yp + (static_cast<std::size_t>(z) * H + yy) * W;
                for (int xx = 0; xx < W; ++xx) yr[xx] = xr[xx / 2];
            }
    }
    return y;
}

Tensor upsample2_backward(const Tensor& dy) {
    if (dy.rank() != 5 || dy.dim(2) % 2 || dy.dim(3) % 2 || dy.dim(4) % 2)
        throw ShapeError("upsample2_backward: expected even spatial extents");
    const int nc = dy.dim(0) * dy.dim(1), D = dy.dim(2), H = dy.dim(3), W = dy.dim(4);
    const int d = D / 2, h = H / 2, w = W / 2;
    Tensor dx({dy.dim(0), dy.dim(1), d, h, w});
    for (int c = 0; c < nc; ++c) {
        const double* gp = dy.data() + static_cast<std::size_t>(c) * D * H * W;
        double* xp = dx.data() + static_cast<std::size_t>(c) * d * h * w;
        for (int z = 0; z < D; ++z)
            for (int yy = 0; yy < H; ++yy) {
                const double* gr = gp + (static_cast<std::size_t>(z) * H + yy) * W;
                double* xr = xp + (static_cast<std::size_t>(z / 2) * h + yy / 2) * w;
                for (int xx = 0; xx < W; ++xx) xr[xx / 2] += gr[xx];
            }
    }
    return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 5 || b.rank() != 5 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3) ||
        a.dim(4) != b.dim(4))
        throw ShapeError("concat_channels: incompatible " + a.shape_string() + " and " + b.shape_string());
    const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3) * a.dim(4);
    Tensor y({n, ca + cb, a.dim(2), a.dim(3), a.dim(4)});
    for (int i = 0; i < n; ++i) {
        double* dst = y.data() + static_cast<std::size_t>(i) * (ca + cb) * plane;
        dst = std::copy_n(a.data() + static_cast<std::size_t>(i) * ca * plane, ca * plane, dst);
        std::copy_n(b.data() + static_cast<std::size_t>(i) * cb * plane, cb * plane, dst);
    }
    return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& dy, int channels_a) {
    if (dy.rank() != 5 || channels_a < 0 || channels_a > dy.dim(1)) throw ShapeError("split_channels: bad split");
    const int n = dy.dim(0), ca = channels_a, cb = dy.dim(1) - channels_a;
    const std::size_t plane = static_cast<std::size_t>(dy.dim(2)) * dy.dim(3) * dy.dim(4);
    Tensor a({n, ca, dy.dim(2), dy.dim(3), dy.dim(4)});
    Tensor b({n, cb, dy.dim(2), dy.dim(3), dy.dim(4)});
    for (int i = 0; i < n; ++i) {
        const double* src = dy.data() + static_cast<std::size_t>(i) * (ca + cb) * plane;
        std::copy_n(src, ca * plane, a.data() + static_cast<std::size_t>(i) * ca * plane);
        std::copy_n(src + ca * plane, cb * plane, b.data() + static_cast<std::size_t>(i) * cb * plane);
    }
    return {std::move(a), std::move(b)};
}

Tensor to_tokens(const Tensor& x) {
    if (x.rank() != 5) throw ShapeError("to_tokens: expected [N, C, D, H, W]");
    const int n = x.dim(0), c = x.dim(1);
    const int t = x.dim(2) * x.dim(3) * x.dim(4);
    Tensor y({n, t, c});
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch)
            for (int p = 0; p < t; ++p)
                y[(static_cast<std::size_t>(i) * t + p) * c + ch] = x[(static_cast<std::size_t>(i) * c + ch) * t + p];
    return y;
}

Tensor from_tokens(const Tensor& tokens, int d, int h, int w) {
    if (tokens.rank() != 3 || tokens.dim(1) != d * h * w) throw ShapeError("from_tokens: token count mismatch");
    const int n = tokens.dim(0), t = tokens.dim(1), c = tokens.dim(2);
    Tensor y({n, c, d, h, w});
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch)
            for (int p = 0; p < t; ++p)
                y[(static_cast<std::size_t>(i) * c + ch) * t + p] = tokens[(static_cast<std::size_t>(i) * t + p) * c + ch];
    return y;
}

namespace {

struct LinearGeometry {
    std::size_t rows;
    int in, out;
};

LinearGeometry linear_geometry(const Tensor& x, const Tensor& weight) {
    if (x.rank() < 1 || weight.rank() != 2 || weight.dim(1) != x.shape().back())
        throw ShapeError("linear: input " + x.shape_string() + " incompatible with weight " + weight.shape_string());
    return {x.size() / static_cast<std::size_t>(weight.dim(1)), weight.dim(1), weight.dim(0)};
}

}  // namespace

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const auto g = linear_geometry(x, weight);
    expect_shape(bias, {g.out}, "linear bias");
    auto shape = x.shape();
    shape.back() = g.out;
    Tensor y(shape);
    for (std::size_t r = 0; r < g.rows; ++r) {
        const double* xr = x.data() + r * g.in;
        double* yr = y.data() + r * g.out;
        for (int o = 0; o < g.out; ++o) {
            const double* wr = weight.data() + static_cast<std::size_t>(o) * g.in;
            double acc = bias[o];
            for (int i = 0; i < g.in; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy) {
    const auto g = linear_geometry(x, weight);
    auto shape = x.shape();
    shape.back() = g.out;
    expect_shape(dy, shape, "linear upstream gradient");
    LinearGrads out{x.zeros_like(), weight.zeros_like(), Tensor({g.out})};
    for (std::size_t r = 0; r < g.rows; ++r) {
        const double* xr = x.data() + r * g.in;
        const double* gr = dy.data() + r * g.out;
        double* dxr = out.dx.data() + r * g.in;
        for (int o = 0; o < g.out; ++o) {
            const double go = gr[o];
            out.dbias[o] += go;
            const double* wr = weight.data() + static_cast<std::size_t>(o) * g.in;
            double* dwr = out.dweight.data() + static_cast<std::size_t>(o) * g.in;
            for (int i = 0; i < g.in; ++i) {
                dwr[i] += go * xr[i];
                dxr[i] += go * wr[i];
            }
        }
    }
    return out;
}

}  // namespace sct::nn
