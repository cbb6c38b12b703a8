#pragma once

#include "sct/volume/volume.hpp"

namespace sct {

/// Structuring element: 6 = face neighbours, 26 = full 3x3x3 cube.
enum class Connectivity { Face6 = 6, Full26 = 26 };

Connectivity connectivity_from_int(int c);

/// Binary dilation repeated `iterations` times. Voxels outside the image are
/// treated as background, so nothing wraps around the borders.
BinaryMask dilate(const BinaryMask& mask, int iterations, Connectivity connectivity = Connectivity::Face6);

}  // namespace sct
