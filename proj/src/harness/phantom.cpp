#include "sct/harness/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sct/core/rng.hpp"

namespace sct::harness {

void PhantomSpec::validate() const {
    if (!all_positive(dims)) throw HarnessError("phantom: dims must be positive");
    if (!(skull_hu_min < skull_hu_max)) throw HarnessError("phantom: empty skull HU range");
    if (!(brain_hu_min <= brain_hu_max)) throw HarnessError("phantom: inverted brain HU range");
    if (skull_hu_min < 300.0 || brain_hu_max >= 300.0)
        throw HarnessError("phantom: skull must lie above and brain below the 300 HU bone threshold");
    if (shell_thickness < 1) throw HarnessError("phantom: shell thickness must be >= 1");
    if (noise_mr1 < 0.0 || noise_mr2 < 0.0) throw HarnessError("phantom: noise sigma must be >= 0");
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation(double a, double b, double c) {
    const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b), cc = std::cos(c),
                 sc = std::sin(c);
    // Rz(a) Ry(b) Rx(c)
    return {{{ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc},
             {sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc},
             {-sb, cb * sc, cb * cc}}};
}

}  // namespace

Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const double min_dim = static_cast<double>(std::min({spec.dims.z, spec.dims.y, spec.dims.x}));
    const double t = spec.shell_thickness;

    std::array<double, 3> centre{};
    const std::array<double, 3> extent{static_cast<double>(spec.dims.z), static_cast<double>(spec.dims.y),
                                       static_cast<double>(spec.dims.x)};
    for (int i = 0; i < 3; ++i) centre[i] = 0.5 * (extent[i] - 1.0) + rng.uniform(-1.0, 1.0);
    std::array<double, 3> outer{};
    for (double& a : outer) a = rng.uniform(0.36, 0.44) * min_dim;
    const Mat3 rot = rotation(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    const double brain_hu = rng.uniform(spec.brain_hu_min, spec.brain_hu_max);

    std::array<double, 3> inner{};
    for (int i = 0; i < 3; ++i) {
        inner[i] = outer[i] - t;
        if (inner[i] < 2.0)
            throw HarnessError("phantom: dims " + std::to_string(spec.dims.z) + "x" + std::to_string(spec.dims.y) +
                               "x" + std::to_string(spec.dims.x) + " too small for a shell of thickness " +
                               std::to_string(spec.shell_thickness));
    }
    const double mean_outer = (outer[0] + outer[1] + outer[2]) / 3.0;
    // Radial coordinate of the inner surface relative to the outer one, averaged over axes.
    const double rho_inner = 1.0 - t / mean_outer;

    const auto n = static_cast<std::size_t>(spec.dims.volume());
    std::vector<float> ct(n), mr1(n), mr2(n);
    std::vector<std::uint8_t> skull(n), brain(n);
    const double lo = spec.skull_hu_min, hi = spec.skull_hu_max;
    const double diploe_lo = lo, diploe_hi = lo + 0.27 * (hi - lo);
    const double cortical_lo = lo + 0.64 * (hi - lo);
    const double diploe = rng.uniform(diploe_lo, diploe_hi);
    const double cortical = rng.uniform(cortical_lo, hi);

    std::size_t i = 0;
    for (std::int64_t z = 0; z < spec.dims.z; ++z)
        for (std::int64_t y = 0; y < spec.dims.y; ++y)
            for (std::int64_t x = 0; x < spec.dims.x; ++x, ++i) {
                const std::array<double, 3> p{z - centre[0], y - centre[1], x - centre[2]};
                std::array<double, 3> q{};
                for (int r = 0; r < 3; ++r) q[r] = rot[0][r] * p[0] + rot[1][r] * p[1] + rot[2][r] * p[2];
                double ro = 0.0, ri = 0.0;
                for (int r = 0; r < 3; ++r) {
                    ro += (q[r] / outer[r]) * (q[r] / outer[r]);
                    ri += (q[r] / inner[r]) * (q[r] / inner[r]);
                }
                if (ri <= 1.0) {
                    brain[i] = 1;
                    ct[i] = static_cast<float>(brain_hu);
                    mr1[i] = 0.75f;
                    mr2[i] = 0.20f;
                } else if (ro <= 1.0) {
                    skull[i] = 1;
                    // u = 0 at the outer table, 1 at the inner table; cortical bone at both, diploe between.
                    const double u = std::clamp((1.0 - std::sqrt(ro)) / (1.0 - rho_inner), 0.0, 1.0);
                    const double w = (2.0 * u - 1.0) * (2.0 * u - 1.0);
                    const double hu = std::clamp(diploe + (cortical - diploe) * w, lo, hi);
                    ct[i] = static_cast<float>(hu);
                    mr1[i] = 0.10f;
                    mr2[i] = static_cast<float>(0.45 + 0.35 * (hu - lo) / (hi - lo));
                } else {
                    ct[i] = -1000.0f;
                }
            }
    if (spec.noise_mr1 > 0.0)
        for (float& v : mr1) v += static_cast<float>(spec.noise_mr1 * rng.normal());
    if (spec.noise_mr2 > 0.0)
        for (float& v : mr2) v += static_cast<float>(spec.noise_mr2 * rng.normal());

    const Spacing sp{};
    return {Volume(spec.dims, sp, Domain::RAW, std::move(mr1)), Volume(spec.dims, sp, Domain::RAW, std::move(mr2)),
            Volume(spec.dims, sp, Domain::HU, std::move(ct)), BinaryMask(spec.dims, std::move(skull)),
            BinaryMask(spec.dims, std::move(brain))};
}

}  // namespace sct::harness
