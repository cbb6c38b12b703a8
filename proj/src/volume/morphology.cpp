#include "sct/volume/morphology.hpp"

#include <string>

namespace sct {

Connectivity connectivity_from_int(int c) {
    if (c == 6) return Connectivity::Face6;
    if (c == 26) return Connectivity::Full26;
    throw std::invalid_argument("connectivity must be 6 or 26, got " + std::to_string(c));
}

namespace {

using Bits = std::vector<std::uint8_t>;

// OR the +/-1 shift along one axis into out. stride is the linear distance of one step on that axis.
void or_shift_axis(const Bits& in, Bits& out, const Dims3& dims, int axis) {
    const std::int64_t n[3] = {dims.z, dims.y, dims.x};
    const std::int64_t stride[3] = {dims.y * dims.x, dims.x, 1};
    const std::int64_t s = stride[axis];
    for (std::int64_t z = 0; z < dims.z; ++z)
        for (std::int64_t y = 0; y < dims.y; ++y) {
            const std::int64_t base = (z * dims.y + y) * dims.x;
            for (std::int64_t x = 0; x < dims.x; ++x) {
                const std::int64_t pos[3] = {z, y, x};
                const std::int64_t i = base + x;
                std::uint8_t v = out[i];
                if (pos[axis] > 0) v |= in[i - s];
                if (pos[axis] + 1 < n[axis]) v |= in[i + s];
                out[i] = v;
            }
        }
}

void dilate_once_face6(Bits& bits, const Dims3& dims) {
    Bits out = bits;
    for (int axis = 0; axis < 3; ++axis) or_shift_axis(bits, out, dims, axis);
    bits.swap(out);
}

// The 3x3x3 cube is separable into three 1D segments of length 3.
void dilate_once_full26(Bits& bits, const Dims3& dims) {
    for (int axis = 0; axis < 3; ++axis) {
        Bits out = bits;
        or_shift_axis(bits, out, dims, axis);
        bits.swap(out);
    }
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, int iterations, Connectivity connectivity) {
    if (iterations < 0) throw std::invalid_argument("dilate: iteration count must be non-negative");
    if (iterations == 0 || mask.size() == 0) return mask;
    Bits bits(mask.bits().begin(), mask.bits().end());
    for (int it = 0; it < iterations; ++it) {
        if (connectivity == Connectivity::Face6) dilate_once_face6(bits, mask.dims());
        else dilate_once_full26(bits, mask.dims());
    }
    return BinaryMask(mask.dims(), std::move(bits));
}

}  // namespace sct
