#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sct/core/rng.hpp"
#include "sct/patch/patch.hpp"
#include "sct/volume/morphology.hpp"

using namespace sct;

namespace {

// Every origin reachable as min(k * S, dim - P) along each axis, enumerated independently.
std::set<Index3> brute_force_origins(const PatchGridSpec& s) {
    auto axis = [](std::int64_t dim, std::int64_t p, std::int64_t step) {
        std::set<std::int64_t> out;
        for (std::int64_t k = 0; k * step <= dim; ++k) out.insert(std::min(k * step, dim - p));
        return out;
    };
    std::set<Index3> out;
    for (auto z : axis(s.dims.z, s.patch.z, s.step.z))
        for (auto y : axis(s.dims.y, s.patch.y, s.step.y))
            for (auto x : axis(s.dims.x, s.patch.x, s.step.x)) out.insert({z, y, x});
    return out;
}

PatchGridSpec random_spec(Rng& rng, std::int64_t max_dim, std::int64_t max_patch) {
    PatchGridSpec s;
    for (int a = 0; a < 3; ++a) {
        const auto dim = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(max_dim)));
        const auto p = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(std::min(dim, max_patch))));
        const auto st = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(p)));
        s.dims[a] = dim;
        s.patch[a] = p;
        s.step[a] = st;
    }
    return s;
}

Volume random_volume(Dims3 dims, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(static_cast<std::size_t>(dims.volume()));
    for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return Volume(dims, {}, Domain::RAW, std::move(v));
}

std::vector<Patch> extract_all(const Volume& v, const PatchSet& set) {
    std::vector<Patch> out;
    for (const auto& o : set.origins) out.push_back({o, extract_patch(v, o, set.patch)});
    return out;
}

BinaryMask ball_shell(Dims3 dims) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims.volume()));
    std::size_t i = 0;
    for (std::int64_t z = 0; z < dims.z; ++z)
        for (std::int64_t y = 0; y < dims.y; ++y)
            for (std::int64_t x = 0; x < dims.x; ++x, ++i) {
                const double r = std::sqrt((z - 15.5) * (z - 15.5) + (y - 15.5) * (y - 15.5) + (x - 15.5) * (x - 15.5));
                bits[i] = r >= 10 && r < 13 ? 1 : 0;
            }
    return BinaryMask(dims, std::move(bits));
}

}  // namespace

TEST(PatchGrid, FullResolutionCount) {
    const PatchSet set = patch_grid({{207, 243, 226}, {128, 128, 128}, {6, 6, 6}});
    EXPECT_EQ(set.size(), 5670u);
    EXPECT_EQ(axis_origins(207, 128, 6).size(), 15u);
    EXPECT_EQ(axis_origins(243, 128, 6).size(), 21u);
    EXPECT_EQ(axis_origins(226, 128, 6).size(), 18u);
}

TEST(PatchGrid, AxisOriginsEndAtBoundary) {
    EXPECT_EQ(axis_origins(10, 4, 3), (std::vector<std::int64_t>{0, 3, 6}));
    EXPECT_EQ(axis_origins(11, 4, 3), (std::vector<std::int64_t>{0, 3, 6, 7}));
    EXPECT_EQ(axis_origins(4, 4, 2), (std::vector<std::int64_t>{0}));
}

TEST(PatchGrid, MatchesBruteForceEnumeration) {
    Rng rng(42);
    for (int t = 0; t < 200; ++t) {
        const PatchGridSpec s = random_spec(rng, 40, 16);
        const PatchSet set = patch_grid(s);
        const auto oracle = brute_force_origins(s);
        ASSERT_EQ(set.size(), oracle.size());
        EXPECT_TRUE(std::is_sorted(set.origins.begin(), set.origins.end()));
        EXPECT_TRUE(std::equal(set.origins.begin(), set.origins.end(), oracle.begin()));
        bool divides = true;
        for (int a = 0; a < 3; ++a) divides = divides && (s.dims[a] - s.patch[a]) % s.step[a] == 0;
        if (divides) EXPECT_EQ(static_cast<double>(set.size()), formula_patch_count(s));
    }
}

TEST(PatchGrid, InvalidSpecsThrow) {
    EXPECT_THROW(patch_grid({{8, 8, 8}, {9, 4, 4}, {1, 1, 1}}), PatchError);
    EXPECT_THROW(patch_grid({{8, 8, 8}, {4, 4, 4}, {0, 1, 1}}), PatchError);
    EXPECT_THROW(patch_grid({{0, 8, 8}, {1, 4, 4}, {1, 1, 1}}), PatchError);
}

TEST(Extract, MatchesDirectIndexing) {
    const Volume v = random_volume({7, 8, 9}, 3);
    const Index3 o{2, 1, 4};
    const Dims3 size{3, 5, 4};
    const Volume p = extract_patch(v, o, size);
    for (std::int64_t z = 0; z < size.z; ++z)
        for (std::int64_t y = 0; y < size.y; ++y)
            for (std::int64_t x = 0; x < size.x; ++x) EXPECT_EQ(p.at(z, y, x), v.at(o.z + z, o.y + y, o.x + x));
    EXPECT_THROW(extract_patch(v, {5, 0, 0}, size), PatchError);
    EXPECT_THROW(extract_patch(v, {-1, 0, 0}, size), PatchError);
}

TEST(Reconstruct, RoundTripOnRandomConfigs) {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        const PatchGridSpec s = random_spec(rng, 24, 10);
        const Volume v = random_volume(s.dims, static_cast<std::uint64_t>(t));
        const auto r = reconstruct(extract_all(v, patch_grid(s)), s.dims);
        EXPECT_EQ(r.coverage.count(), v.size());
        for (std::size_t i = 0; i < v.size(); ++i) ASSERT_NEAR(r.volume[i], v[i], 1e-6);
    }
}

TEST(Reconstruct, AveragesOverlaps) {
    const Dims3 dims{1, 1, 3};
    std::vector<Patch> patches{{{0, 0, 0}, Volume({1, 1, 2}, {}, Domain::RAW, {1.0f, 2.0f})},
                               {{0, 0, 1}, Volume({1, 1, 2}, {}, Domain::RAW, {4.0f, 6.0f})}};
    const auto r = reconstruct(patches, dims);
    EXPECT_FLOAT_EQ(r.volume[0], 1.0f);
    EXPECT_FLOAT_EQ(r.volume[1], 3.0f);
    EXPECT_FLOAT_EQ(r.volume[2], 6.0f);
}

TEST(Reconstruct, UncoveredVoxelsAreZero) {
    std::vector<Patch> patches{{{0, 0, 0}, Volume::filled({1, 1, 1}, 5.0f, Domain::RAW)}};
    const auto r = reconstruct(patches, {1, 1, 2});
    EXPECT_EQ(r.volume[1], 0.0f);
    EXPECT_FALSE(r.coverage[1]);
    EXPECT_TRUE(r.coverage[0]);
}

TEST(Reconstruct, PermutationAndWorkerInvariance) {
    const PatchGridSpec s{{12, 10, 11}, {5, 4, 6}, {2, 3, 2}};
    Rng rng(9);
    std::vector<Patch> patches;
    for (const auto& o : patch_grid(s).origins) patches.push_back({o, random_volume(s.patch, rng.next_u64())});
    const auto base = reconstruct(patches, s.dims);
    auto shuffled = patches;
    rng.shuffle(shuffled);
    const auto perm = reconstruct(shuffled, s.dims);
    for (std::size_t i = 0; i < base.volume.size(); ++i) EXPECT_NEAR(perm.volume[i], base.volume[i], 1e-6);
    for (unsigned w : {2u, 3u, 7u}) {
        const auto par = reconstruct(patches, s.dims, Domain::RAW, w);
        EXPECT_TRUE(std::equal(par.volume.data().begin(), par.volume.data().end(), base.volume.data().begin()));
    }
}

TEST(Sampling, StrataCountsAndMembership) {
    const Dims3 dims{32, 32, 32}, patch{16, 16, 16};
    const BinaryMask skull = ball_shell(dims);
    std::vector<std::uint8_t> inner(skull.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        const auto z = static_cast<std::int64_t>(i / 1024), y = static_cast<std::int64_t>(i / 32 % 32),
                   x = static_cast<std::int64_t>(i % 32);
        const double r = std::sqrt((z - 15.5) * (z - 15.5) + (y - 15.5) * (y - 15.5) + (x - 15.5) * (x - 15.5));
        inner[i] = r < 10 ? 1 : 0;
    }
    const BinaryMask brain(dims, inner);
    const BinaryMask valid = valid_center_mask(dims, patch);
    const BinaryMask other = mask_difference(mask_union(dilate(skull, 2), brain), skull);

    for (double f : {1.0, 0.8, 0.25, 0.0}) {
        const CenterSample s = sample_centers(skull, brain, 100, f, patch, 5);
        const auto n_skull = static_cast<std::size_t>(std::llround(100 * f));
        EXPECT_EQ(s.origins.size(), 100u);
        EXPECT_EQ(s.count(Stratum::Skull), n_skull);
        EXPECT_EQ(s.count(Stratum::Other), 100u - n_skull);
        for (std::size_t i = 0; i < s.origins.size(); ++i) {
            const Index3 c = s.origins[i] + Index3{8, 8, 8};
            EXPECT_TRUE(valid.at(c.z, c.y, c.x));
            if (s.strata[i] == Stratum::Skull) EXPECT_TRUE(skull.at(c.z, c.y, c.x));
            else EXPECT_TRUE(other.at(c.z, c.y, c.x));
            for (int a = 0; a < 3; ++a) {
                EXPECT_GE(s.origins[i][a], 0);
                EXPECT_LE(s.origins[i][a] + patch[a], dims[a]);
            }
        }
    }
}

TEST(Sampling, DeterministicPerSeed) {
    const BinaryMask skull = ball_shell({32, 32, 32});
    const auto a = sample_centers(skull, 50, 0.8, {16, 16, 16}, 11);
    const auto b = sample_centers(skull, 50, 0.8, {16, 16, 16}, 11);
    const auto c = sample_centers(skull, 50, 0.8, {16, 16, 16}, 12);
    EXPECT_EQ(a.origins, b.origins);
    EXPECT_NE(a.origins, c.origins);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Sampling, EmptySkullThrows) {
    EXPECT_THROW(sample_centers(BinaryMask({32, 32, 32}), 10, 1.0, {16, 16, 16}, 0), PatchError);
}
