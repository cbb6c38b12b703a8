#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "sct/core/index3.hpp"
#include "sct/volume/volume.hpp"

namespace sct {

class PatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Image dims, patch size and per-axis step defining a deterministic grid of origins.
struct PatchGridSpec {
    Dims3 dims;
    Dims3 patch;
    Index3 step;

    /// Throws PatchError unless 1 <= patch <= dims and step >= 1 on every axis.
    void validate() const;
};

/// Ordered, duplicate-free patch origins (lexicographic z, y, x). Every origin keeps the
/// patch fully inside dims.
struct PatchSet {
    std::vector<Index3> origins;
    Dims3 patch;
    Dims3 dims;

    std::size_t size() const { return origins.size(); }
};

/// Origins along one axis: {0, S, 2S, ...} plus a final origin clamped to dim - P.
std::vector<std::int64_t> axis_origins(std::int64_t dim, std::int64_t patch, std::int64_t step);

/// Full grid. When the step divides dim - P on every axis the count equals
/// prod(1 + (dim - P) / S); otherwise the clamped last origin adds one per axis.
PatchSet patch_grid(const PatchGridSpec& spec);

/// prod(1 + (dim - P) / S) evaluated in real arithmetic; fractional when S does not divide.
double formula_patch_count(const PatchGridSpec& spec);

/// Copy of the sub-box [origin, origin + size). Throws PatchError when out of bounds.
Volume extract_patch(const Volume& v, const Index3& origin, const Dims3& size);
BinaryMask extract_patch(const BinaryMask& m, const Index3& origin, const Dims3& size);

enum class Stratum { Skull, Other };

/// Sampled patch locations in draw order. Draws are with replacement, so origins may repeat.
struct CenterSample {
    std::vector<Index3> origins;
    std::vector<Stratum> strata;
    Dims3 patch;
    Dims3 dims;
    std::uint64_t seed = 0;

    std::size_t count(Stratum s) const;
};

/// Centre c maps to origin c - floor(P / 2); a centre is valid when that origin keeps the patch in bounds.
BinaryMask valid_center_mask(const Dims3& dims, const Dims3& patch);

/// round(n * skull_fraction) centres drawn uniformly from valid skull voxels, the remainder
/// from valid voxels of (dilate(skull, 2) | brain) minus the skull. Throws PatchError when
/// a stratum that must be drawn from is empty.
CenterSample sample_centers(const BinaryMask& skull, const BinaryMask& brain, std::size_t n, double skull_fraction,
                            const Dims3& patch, std::uint64_t seed);

/// Same as above with no brain mask; the other stratum is dilate(skull, 2) minus the skull.
CenterSample sample_centers(const BinaryMask& skull, std::size_t n, double skull_fraction, const Dims3& patch,
                            std::uint64_t seed);

/// A patch of values placed at an origin in a larger image.
struct Patch {
    Index3 origin;
    Volume values;
};

struct Reconstruction {
    Volume volume;
    BinaryMask coverage;
};

/// Overlap-averaged reassembly: every voxel is the mean of all patch values covering it,
/// uncovered voxels are 0 with a false coverage bit. Sums and counts are accumulated in
/// double precision in patch order; with workers > 1 each worker owns a z-slab of the
/// accumulators, so the result does not depend on the worker count.
Reconstruction reconstruct(std::span<const Patch> patches, const Dims3& dims, Domain domain = Domain::RAW,
                           unsigned workers = 1);

nlohmann::json to_json(const PatchSet& set, std::uint64_t seed);
nlohmann::json to_json(const CenterSample& sample);

}  // namespace sct
