#pragma once

#include "sct/volume/volume.hpp"

namespace sct {

inline constexpr double kCtScale = 3071.0;
inline constexpr float kDefaultSkullThresholdHu = 300.0f;

/// Per-volume min-max rescale to [0, 1]. Throws VolumeError on a constant volume.
Volume normalize_mr(const Volume& v);

/// Clamp HU to [0, 3071] and divide by 3071. Negative HU (air, fat, water side) maps to 0.
Volume normalize_ct(const Volume& hu);

/// x * 3071, back to HU.
Volume denormalize_ct(const Volume& norm);

struct SkullMaskResult {
    BinaryMask mask;
    bool empty = false;
};

/// Voxels with HU >= threshold.
SkullMaskResult skull_mask_from_ct(const Volume& hu, float threshold_hu = kDefaultSkullThresholdHu);

}  // namespace sct
