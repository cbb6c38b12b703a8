#include "sct/patch/patch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "sct/core/rng.hpp"
#include "sct/volume/morphology.hpp"

namespace sct {

void PatchGridSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (patch[a] < 1 || patch[a] > dims[a] || step[a] < 1) {
            std::ostringstream os;
            os << "invalid patch grid: dims " << dims << " patch " << patch << " step " << step;
            throw PatchError(os.str());
        }
    }
}

std::vector<std::int64_t> axis_origins(std::int64_t dim, std::int64_t patch, std::int64_t step) {
    std::vector<std::int64_t> out;
    const std::int64_t last = dim - patch;
    for (std::int64_t o = 0; o <= last; o += step) out.push_back(o);
    if (out.back() != last) out.push_back(last);
    return out;
}

PatchSet patch_grid(const PatchGridSpec& spec) {
    spec.validate();
    const auto oz = axis_origins(spec.dims.z, spec.patch.z, spec.step.z);
    const auto oy = axis_origins(spec.dims.y, spec.patch.y, spec.step.y);
    const auto ox = axis_origins(spec.dims.x, spec.patch.x, spec.step.x);
    PatchSet set{{}, spec.patch, spec.dims};
    set.origins.reserve(oz.size() * oy.size() * ox.size());
    for (auto z : oz)
        for (auto y : oy)
            for (auto x : ox) set.origins.push_back({z, y, x});
    return set;
}

double formula_patch_count(const PatchGridSpec& spec) {
    double n = 1.0;
    for (int a = 0; a < 3; ++a)
        n *= 1.0 + static_cast<double>(spec.dims[a] - spec.patch[a]) / static_cast<double>(spec.step[a]);
    return n;
}

namespace {

void check_box(const Dims3& dims, const Index3& origin, const Dims3& size) {
    for (int a = 0; a < 3; ++a) {
        if (origin[a] < 0 || size[a] < 1 || origin[a] + size[a] > dims[a]) {
            std::ostringstream os;
            os << "patch at " << origin << " of size " << size << " exceeds dims " << dims;
            throw PatchError(os.str());
        }
    }
}

template <typename T>
std::vector<T> copy_box(std::span<const T> src, const Dims3& dims, const Index3& o, const Dims3& size) {
    std::vector<T> out(static_cast<std::size_t>(size.volume()));
    auto dst = out.begin();
    for (std::int64_t z = 0; z < size.z; ++z)
        for (std::int64_t y = 0; y < size.y; ++y) {
            const auto row = src.begin() + static_cast<std::ptrdiff_t>(linear_index(dims, o.z + z, o.y + y, o.x));
            dst = std::copy(row, row + size.x, dst);
        }
    return out;
}

}  // namespace

Volume extract_patch(const Volume& v, const Index3& origin, const Dims3& size) {
    check_box(v.dims(), origin, size);
    return Volume(size, v.spacing(), v.domain(), copy_box(v.data(), v.dims(), origin, size));
}

BinaryMask extract_patch(const BinaryMask& m, const Index3& origin, const Dims3& size) {
    check_box(m.dims(), origin, size);
    return BinaryMask(size, copy_box(m.bits(), m.dims(), origin, size));
}

std::size_t CenterSample::count(Stratum s) const {
    return static_cast<std::size_t>(std::count(strata.begin(), strata.end(), s));
}

BinaryMask valid_center_mask(const Dims3& dims, const Dims3& patch) {
    if (!all_positive(dims)) throw PatchError("dims must be positive");
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims.volume()), 0);
    const Index3 half{patch.z / 2, patch.y / 2, patch.x / 2};
    for (std::int64_t z = half.z; z <= dims.z - patch.z + half.z; ++z)
        for (std::int64_t y = half.y; y <= dims.y - patch.y + half.y; ++y)
            for (std::int64_t x = half.x; x <= dims.x - patch.x + half.x; ++x) bits[linear_index(dims, z, y, x)] = 1;
    return BinaryMask(dims, std::move(bits));
}

namespace {

std::vector<std::size_t> set_indices(const BinaryMask& m) {
    std::vector<std::size_t> out;
    out.reserve(m.count());
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) out.push_back(i);
    return out;
}

CenterSample sample_from(const BinaryMask& skull, const BinaryMask& other_region, std::size_t n, double skull_fraction,
                         const Dims3& patch, std::uint64_t seed) {
    if (!(skull_fraction >= 0.0 && skull_fraction <= 1.0))
        throw PatchError("skull_fraction must lie in [0, 1]");
    const Dims3 dims = skull.dims();
    for (int a = 0; a < 3; ++a)
        if (patch[a] < 1 || patch[a] > dims[a]) throw PatchError("patch larger than the image");

    const BinaryMask valid = valid_center_mask(dims, patch);
    const auto n_skull = static_cast<std::size_t>(std::llround(static_cast<double>(n) * skull_fraction));
    const std::size_t n_other = n - n_skull;

    const auto skull_pool = set_indices(mask_intersection(skull, valid));
    const auto other_pool = set_indices(mask_intersection(mask_difference(other_region, skull), valid));
    if (n_skull > 0 && skull_pool.empty()) throw PatchError("no valid patch centres on the skull");
    if (n_other > 0 && other_pool.empty()) throw PatchError("no valid patch centres near the skull or in the brain");

    CenterSample out{{}, {}, patch, dims, seed};
    out.origins.reserve(n);
    out.strata.reserve(n);
    Rng rng(seed);
    const Index3 half{patch.z / 2, patch.y / 2, patch.x / 2};
    auto emit = [&](const std::vector<std::size_t>& pool, Stratum s) {
        const std::size_t idx = pool[rng.index(pool.size())];
        const auto x = static_cast<std::int64_t>(idx) % dims.x;
        const auto y = (static_cast<std::int64_t>(idx) / dims.x) % dims.y;
        const auto z = static_cast<std::int64_t>(idx) / (dims.x * dims.y);
        out.origins.push_back(Index3{z, y, x} - half);
        out.strata.push_back(s);
    };
    for (std::size_t i = 0; i < n_skull; ++i) emit(skull_pool, Stratum::Skull);
    for (std::size_t i = 0; i < n_other; ++i) emit(other_pool, Stratum::Other);
    return out;
}

}  // namespace

CenterSample sample_centers(const BinaryMask& skull, const BinaryMask& brain, std::size_t n, double skull_fraction,
                            const Dims3& patch, std::uint64_t seed) {
    if (brain.dims() != skull.dims()) throw PatchError("skull and brain masks differ in dims");
    return sample_from(skull, mask_union(dilate(skull, 2), brain), n, skull_fraction, patch, seed);
}

CenterSample sample_centers(const BinaryMask& skull, std::size_t n, double skull_fraction, const Dims3& patch,
                            std::uint64_t seed) {
    return sample_from(skull, dilate(skull, 2), n, skull_fraction, patch, seed);
}

Reconstruction reconstruct(std::span<const Patch> patches, const Dims3& dims, Domain domain, unsigned workers) {
    if (!all_positive(dims)) throw PatchError("reconstruct: dims must be positive");
    for (const auto& p : patches) check_box(dims, p.origin, p.values.dims());

    const auto n = static_cast<std::size_t>(dims.volume());
    std::vector<double> sum(n, 0.0);
    std::vector<std::uint32_t> count(n, 0);

    auto accumulate_slab = [&](std::int64_t z_begin, std::int64_t z_end) {
        for (const auto& p : patches) {
            const Dims3& size = p.values.dims();
            const std::int64_t lo = std::max(z_begin, p.origin.z);
            const std::int64_t hi = std::min(z_end, p.origin.z + size.z);
            for (std::int64_t z = lo; z < hi; ++z)
                for (std::int64_t y = 0; y < size.y; ++y) {
                    const std::size_t dst = linear_index(dims, z, p.origin.y + y, p.origin.x);
                    const std::size_t src = linear_index(size, z - p.origin.z, y, 0);
                    for (std::int64_t x = 0; x < size.x; ++x) {
                        sum[dst + x] += p.values[src + x];
                        ++count[dst + x];
                    }
                }
        }
    };

    workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(dims.z));
    if (workers == 1) {
        accumulate_slab(0, dims.z);
    } else {
        std::vector<std::jthread> pool;
        const std::int64_t chunk = (dims.z + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::int64_t b = w * chunk;
            const std::int64_t e = std::min(dims.z, b + chunk);
            if (b < e) pool.emplace_back(accumulate_slab, b, e);
        }
    }

    std::vector<float> values(n, 0.0f);
    std::vector<std::uint8_t> covered(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] == 0) continue;
        values[i] = static_cast<float>(sum[i] / count[i]);
        covered[i] = 1;
    }
    return {Volume(dims, Spacing{}, domain, std::move(values)), BinaryMask(dims, std::move(covered))};
}

nlohmann::json to_json(const PatchSet& set, std::uint64_t seed) {
    nlohmann::json origins = nlohmann::json::array();
    for (const auto& o : set.origins) origins.push_back({o.z, o.y, o.x});
    return {{"origins", std::move(origins)},
            {"patch", {set.patch.z, set.patch.y, set.patch.x}},
            {"dims", {set.dims.z, set.dims.y, set.dims.x}},
            {"seed", seed}};
}

nlohmann::json to_json(const CenterSample& sample) {
    nlohmann::json origins = nlohmann::json::array();
    nlohmann::json strata = nlohmann::json::array();
    for (std::size_t i = 0; i < sample.origins.size(); ++i) {
        const auto& o = sample.origins[i];
        origins.push_back({o.z, o.y, o.x});
        strata.push_back(sample.strata[i] == Stratum::Skull ? "skull" : "other");
    }
    return {{"origins", std::move(origins)},
            {"strata", std::move(strata)},
            {"patch", {sample.patch.z, sample.patch.y, sample.patch.x}},
            {"dims", {sample.dims.z, sample.dims.y, sample.dims.x}},
            {"seed", sample.seed}};
}

}  // namespace sct
