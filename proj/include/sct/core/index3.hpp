#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>

namespace sct {

/// Integer triple in (z, y, x) order. Used for dims, coordinates, patch sizes and steps.
struct Index3 {
    std::int64_t z = 0;
    std::int64_t y = 0;
    std::int64_t x = 0;

    constexpr std::int64_t operator[](int axis) const { return axis == 0 ? z : (axis == 1 ? y : x); }
    constexpr std::int64_t& operator[](int axis) { return axis == 0 ? z : (axis == 1 ? y : x); }

    constexpr std::int64_t volume() const { return z * y * x; }

    friend constexpr bool operator==(const Index3&, const Index3&) = default;
    friend constexpr auto operator<=>(const Index3&, const Index3&) = default;

    friend constexpr Index3 operator+(Index3 a, Index3 b) { return {a.z + b.z, a.y + b.y, a.x + b.x}; }
    friend constexpr Index3 operator-(Index3 a, Index3 b) { return {a.z - b.z, a.y - b.y, a.x - b.x}; }

    friend std::ostream& operator<<(std::ostream& os, const Index3& i) {
        return os << '(' << i.z << ',' << i.y << ',' << i.x << ')';
    }
};

using Dims3 = Index3;

/// Row-major linear offset with x fastest.
constexpr std::size_t linear_index(const Dims3& dims, std::int64_t z, std::int64_t y, std::int64_t x) {
    return static_cast<std::size_t>((z * dims.y + y) * dims.x + x);
}

constexpr bool all_positive(const Dims3& d) { return d.z > 0 && d.y > 0 && d.x > 0; }

}  // namespace sct
