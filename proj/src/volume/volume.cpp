#include "sct/volume/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sct {

std::string_view to_string(Domain d) {
    switch (d) {
        case Domain::HU: return "HU";
        case Domain::NORM_MR: return "NORM_MR";
        case Domain::NORM_CT: return "NORM_CT";
        case Domain::RAW: return "RAW";
    }
    return "RAW";
}

Domain domain_from_string(std::string_view s) {
    if (s == "HU") return Domain::HU;
    if (s == "NORM_MR") return Domain::NORM_MR;
    if (s == "NORM_CT") return Domain::NORM_CT;
    if (s == "RAW") return Domain::RAW;
    throw VolumeError("unknown intensity domain '" + std::string(s) + "'");
}

Volume::Volume(Dims3 dims, Spacing spacing, Domain domain, std::vector<float> data)
    : dims_(dims), spacing_(spacing), domain_(domain), data_(std::move(data)) {
    if (!all_positive(dims_)) throw VolumeError("volume dims must be positive");
    if (data_.size() != static_cast<std::size_t>(dims_.volume())) {
        std::ostringstream os;
        os << "volume length mismatch: dims " << dims_ << " need " << dims_.volume() << " values, got "
           << data_.size();
        throw VolumeError(os.str());
    }
    float lo = 0.0f, hi = 0.0f;
    switch (domain_) {
        case Domain::NORM_MR:
        case Domain::NORM_CT: lo = 0.0f; hi = 1.0f; break;
        case Domain::HU: lo = kHuMin; hi = kHuMax; break;
        case Domain::RAW: return;
    }
    for (float v : data_) {
        if (!(v >= lo && v <= hi)) {
            std::ostringstream os;
            os << "value " << v << " outside the " << to_string(domain_) << " range [" << lo << ", " << hi << "]";
            throw VolumeError(os.str());
        }
    }
}

Volume Volume::filled(Dims3 dims, float value, Domain domain, Spacing spacing) {
    if (!all_positive(dims)) throw VolumeError("volume dims must be positive");
    return Volume(dims, spacing, domain, std::vector<float>(static_cast<std::size_t>(dims.volume()), value));
}

BinaryMask::BinaryMask(Dims3 dims) : dims_(dims), bits_(static_cast<std::size_t>(dims.volume()), 0) {
    if (!all_positive(dims)) throw VolumeError("mask dims must be positive");
}

BinaryMask::BinaryMask(Dims3 dims, std::vector<std::uint8_t> bits) : dims_(dims), bits_(std::move(bits)) {
    if (!all_positive(dims)) throw VolumeError("mask dims must be positive");
    if (bits_.size() != static_cast<std::size_t>(dims.volume())) throw VolumeError("mask length mismatch");
    for (auto& b : bits_) b = b ? 1 : 0;
    count_ = recount();
}

std::size_t BinaryMask::recount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
    if (dims_ != other.dims_) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !other.bits_[i]) return false;
    return true;
}

namespace {

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
    if (a.dims() != b.dims()) throw VolumeError("mask dims differ");
    std::vector<std::uint8_t> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]) ? 1 : 0;
    return BinaryMask(a.dims(), std::move(out));
}

}  // namespace

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, [](bool x, bool y) { return x || y; });
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, [](bool x, bool y) { return x && y; });
}

BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, [](bool x, bool y) { return x && !y; });
}

Volume mask_to_volume(const BinaryMask& m, Spacing spacing) {
    std::vector<float> data(m.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = m[i] ? 1.0f : 0.0f;
    return Volume(m.dims(), spacing, Domain::RAW, std::move(data));
}

BinaryMask volume_to_mask(const Volume& v, float threshold) {
    std::vector<std::uint8_t> bits(v.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = v[i] >= threshold ? 1 : 0;
    return BinaryMask(v.dims(), std::move(bits));
}

}  // namespace sct
