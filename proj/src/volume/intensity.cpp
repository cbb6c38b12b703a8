#include "sct/volume/intensity.hpp"

#include <algorithm>

namespace sct {

namespace {

void require_domain(const Volume& v, Domain d, const char* op) {
    if (v.domain() != d)
        throw VolumeError(std::string(op) + ": expected " + std::string(to_string(d)) + " volume, got " +
                          std::string(to_string(v.domain())));
}

}  // namespace

Volume normalize_mr(const Volume& v) {
    if (v.domain() == Domain::NORM_MR) return v;
    if (v.domain() != Domain::RAW && v.domain() != Domain::HU)
        throw VolumeError("normalize_mr: expected a RAW or HU volume");
    const auto [lo_it, hi_it] = std::minmax_element(v.data().begin(), v.data().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) throw VolumeError("normalize_mr: constant volume cannot be min-max normalized");
    const double range = hi - lo;
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float x = v[i];
        if (x == *lo_it) out[i] = 0.0f;
        else if (x == *hi_it) out[i] = 1.0f;
        else out[i] = std::clamp(static_cast<float>((x - lo) / range), 0.0f, 1.0f);
    }
    return Volume(v.dims(), v.spacing(), Domain::NORM_MR, std::move(out));
}

Volume normalize_ct(const Volume& hu) {
    require_domain(hu, Domain::HU, "normalize_ct");
    std::vector<float> out(hu.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = std::clamp(static_cast<double>(hu[i]), 0.0, kCtScale);
        out[i] = static_cast<float>(x / kCtScale);
    }
    return Volume(hu.dims(), hu.spacing(), Domain::NORM_CT, std::move(out));
}

Volume denormalize_ct(const Volume& norm) {
    require_domain(norm, Domain::NORM_CT, "denormalize_ct");
    std::vector<float> out(norm.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::min(static_cast<float>(static_cast<double>(norm[i]) * kCtScale), kHuMax);
    return Volume(norm.dims(), norm.spacing(), Domain::HU, std::move(out));
}

SkullMaskResult skull_mask_from_ct(const Volume& hu, float threshold_hu) {
    require_domain(hu, Domain::HU, "skull_mask_from_ct");
    std::vector<std::uint8_t> bits(hu.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = hu[i] >= threshold_hu ? 1 : 0;
    BinaryMask mask(hu.dims(), std::move(bits));
    const bool empty = mask.empty();
    return {std::move(mask), empty};
}

}  // namespace sct
