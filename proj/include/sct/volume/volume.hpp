#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sct/core/index3.hpp"

namespace sct {

/// Intensity domain of a Volume.
///   HU      - CT Hounsfield units, clamped to [-1024, 3071] on import
///   NORM_MR - min-max normalized MR, in [0, 1]
///   NORM_CT - HU clamped to [0, 3071] and divided by 3071, in [0, 1]
///   RAW     - unconstrained intensities (raw MR, label maps)
enum class Domain { HU, NORM_MR, NORM_CT, RAW };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

inline constexpr float kHuMin = -1024.0f;
inline constexpr float kHuMax = 3071.0f;

class VolumeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Voxel spacing in millimetres, (z, y, x) order.
struct Spacing {
    double z = 1.0;
    double y = 1.0;
    double x = 1.0;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Immutable 3D scalar field. Voxels are stored row-major with x fastest:
/// offset(z, y, x) = (z * H + y) * W + x for dims (D, H, W).
class Volume {
public:
    Volume() = default;

    /// Validates the length and the domain range invariant; throws VolumeError.
    Volume(Dims3 dims, Spacing spacing, Domain domain, std::vector<float> data);

    /// Constant-filled volume.
    static Volume filled(Dims3 dims, float value, Domain domain, Spacing spacing = {});

    const Dims3& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return data_.size(); }
    std::span<const float> data() const { return data_; }

    float at(std::int64_t z, std::int64_t y, std::int64_t x) const { return data_[linear_index(dims_, z, y, x)]; }
    float operator[](std::size_t i) const { return data_[i]; }

    /// Moves the payload out, leaving this volume empty.
    std::vector<float> release() && { return std::move(data_); }

private:
    Dims3 dims_{};
    Spacing spacing_{};
    Domain domain_ = Domain::RAW;
    std::vector<float> data_;
};

/// 3D boolean field aligned with a Volume. The population count is cached at construction.
class BinaryMask {
public:
    BinaryMask() = default;
    explicit BinaryMask(Dims3 dims);
    BinaryMask(Dims3 dims, std::vector<std::uint8_t> bits);

    const Dims3& dims() const { return dims_; }
    std::size_t size() const { return bits_.size(); }
    std::span<const std::uint8_t> bits() const { return bits_; }

    bool at(std::int64_t z, std::int64_t y, std::int64_t x) const { return bits_[linear_index(dims_, z, y, x)] != 0; }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }

    std::size_t count() const { return count_; }
    std::size_t recount() const;
    bool empty() const { return count_ == 0; }

    /// True when every set bit of this mask is also set in other.
    bool subset_of(const BinaryMask& other) const;

    friend bool operator==(const BinaryMask& a, const BinaryMask& b) { return a.dims_ == b.dims_ && a.bits_ == b.bits_; }

private:
    Dims3 dims_{};
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b);

/// Mask as a 0/1 RAW volume, and back (voxels >= threshold are set).
Volume mask_to_volume(const BinaryMask& m, Spacing spacing = {});
BinaryMask volume_to_mask(const Volume& v, float threshold = 0.5f);

}  // namespace sct
