#include <doctest.h>

#include <numeric>
#include <random>
#include <stdexcept>

#include "coopsense/quality.hpp"

using namespace coopsense;

namespace {

scene::PointCloud random_points_in(const scene::BoundingBox& box, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    scene::PointCloud cloud;
    for (int i = 0; i < n; ++i)
        cloud.push_back({box.min(0) + u(rng) * box.lengths.x,
                         box.min(1) + u(rng) * box.lengths.y,
                         box.min(2) + u(rng) * box.lengths.z});
    return cloud;
}

}  // namespace

TEST_CASE("resolution validation") {
    CHECK(quality::PartitionResolution(1).cells() == 1);
    CHECK(quality::PartitionResolution(4).cells() == 64);
    CHECK_THROWS_AS(quality::PartitionResolution(0), std::invalid_argument);
    CHECK_THROWS_AS(quality::PartitionResolution(5), std::invalid_argument);
}

TEST_CASE("voxel arithmetic on a 2x2x2 split") {
    const scene::BoundingBox box{{0, 0, 0}, {2, 2, 2}};
    const quality::PartitionResolution res(2);

    auto ind = quality::compute_indicator({}, box, res);
    CHECK(ind.counts == std::vector<std::int64_t>(8, 0));

    ind = quality::compute_indicator({{-0.5, -0.5, -0.5}}, box, res);
    CHECK(ind.counts[0] == 1);
    CHECK(std::accumulate(ind.counts.begin(), ind.counts.end(), std::int64_t{0}) == 1);

    // a point on the max corner clamps into the last voxel instead of overflowing
    ind = quality::compute_indicator({{1, 1, 1}}, box, res);
    CHECK(ind.counts[7] == 1);
}

TEST_CASE("center point at K=3 lands in the middle voxel") {
    const scene::BoundingBox box{{0, 0, 0}, {2, 2, 2}};
    const auto ind = quality::compute_indicator({{0, 0, 0}}, box, quality::PartitionResolution(3));
    CHECK(ind.counts[1 + 3 * 1 + 9 * 1] == 1);
}

TEST_CASE("points outside the box are rejected") {
    const scene::BoundingBox box{{0, 0, 0}, {2, 2, 2}};
    CHECK_THROWS_AS(
        quality::compute_indicator({{1.01, 0, 0}}, box, quality::PartitionResolution(2)),
        std::invalid_argument);
}

TEST_CASE("conservation holds for every resolution") {
    std::mt19937_64 rng(3);
    const scene::BoundingBox box{{5, -2, 1}, {3.5, 1.8, 2.2}};
    const auto cloud = random_points_in(box, 257, rng);
    for (int K = 1; K <= 4; ++K) {
        const auto ind = quality::compute_indicator(cloud, box, quality::PartitionResolution(K));
        CHECK(quality::point_count(ind) == 257);
    }
}

TEST_CASE("adding a point increments exactly one voxel") {
    std::mt19937_64 rng(9);
    const scene::BoundingBox box{{0, 0, 0}, {4, 4, 4}};
    auto cloud = random_points_in(box, 40, rng);
    const auto before = quality::compute_indicator(cloud, box, quality::PartitionResolution(3));
    cloud.push_back({1.3, -0.7, 0.2});
    const auto after = quality::compute_indicator(cloud, box, quality::PartitionResolution(3));
    int changed = 0;
    for (std::size_t k = 0; k < before.counts.size(); ++k) {
        CHECK(after.counts[k] >= before.counts[k]);
        if (after.counts[k] != before.counts[k]) {
            CHECK(after.counts[k] == before.counts[k] + 1);
            ++changed;
        }
    }
    CHECK(changed == 1);
}

TEST_CASE("fusion sums the selected indicators") {
    quality::QualityIndicator z0{2, std::vector<std::int64_t>(8, 0)};
    quality::QualityIndicator z1{2, std::vector<std::int64_t>(8, 0)};
    z0.counts[0] = 1;
    z0.counts[1] = 2;
    z1.counts[0] = 3;
    z1.counts[5] = 7;

    auto only_first = quality::fuse_indicators({1, 0}, {z0, z1});
    CHECK(only_first.counts == z0.counts);

    auto both = quality::fuse_indicators({1, 1}, {z0, z1});
    CHECK(both.counts[0] == 4);
    CHECK(both.counts[1] == 2);
    CHECK(both.counts[5] == 7);

    auto none = quality::fuse_indicators({0, 0}, {z0, z1});
    CHECK(quality::point_count(none) == 0);
}

TEST_CASE("fusion is linear over disjoint selections") {
    std::mt19937_64 rng(17);
    const scene::BoundingBox box{{0, 0, 0}, {3, 3, 3}};
    std::vector<quality::QualityIndicator> inds;
    for (int n = 0; n < 4; ++n)
        inds.push_back(quality::compute_indicator(random_points_in(box, 50 + 13 * n, rng), box,
                                                  quality::PartitionResolution(3)));
    const auto a = quality::fuse_indicators({1, 0, 1, 0}, inds);
    const auto b = quality::fuse_indicators({0, 1, 0, 1}, inds);
    const auto all = quality::fuse_indicators({1, 1, 1, 1}, inds);
    for (std::size_t k = 0; k < all.counts.size(); ++k)
        CHECK(a.counts[k] + b.counts[k] == all.counts[k]);
}

TEST_CASE("fusion rejects mismatched resolutions") {
    quality::QualityIndicator z0{2, std::vector<std::int64_t>(8, 0)};
    quality::QualityIndicator z1{3, std::vector<std::int64_t>(27, 0)};
    CHECK_THROWS_AS(quality::fuse_indicators({1, 1}, {z0, z1}), std::invalid_argument);
}

TEST_CASE("point count sums the voxels") {
    quality::QualityIndicator z{2, {1, 2, 3, 0, 0, 0, 0, 0}};
    CHECK(quality::point_count(z) == 6);
}
