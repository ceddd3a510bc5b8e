#pragma once

#include <cstdint>
#include <vector>

#include "coopsense/scene.hpp"

namespace coopsense::quality {

/// Number of cuts per axis for the voxel grid; valid range is 1..4.
struct PartitionResolution {
    int K = 3;

    PartitionResolution() = default;
    explicit PartitionResolution(int k);
    int cells() const { return K * K * K; }
};

/// Per-voxel point counts over an object's bounding box, flattened as
/// index = ix + K*iy + K*K*iz.
struct QualityIndicator {
    int K = 0;
    std::vector<std::int64_t> counts;
};

/// Counts the cloud's points per voxel of the box split into K slabs per axis.
/// Points exactly on the upper face clamp into the last slab. Every point must
/// lie inside the box (closed intervals); otherwise std::invalid_argument.
QualityIndicator compute_indicator(const scene::PointCloud& points,
                                   const scene::BoundingBox& box,
                                   PartitionResolution resolution);

/// Elementwise sum of the indicators picked by the selection flags. All
/// indicators must share the same K; mismatches throw std::invalid_argument.
/// An all-zero selection yields the zero indicator.
QualityIndicator fuse_indicators(const std::vector<std::uint8_t>& selection,
                                 const std::vector<QualityIndicator>& indicators);

std::int64_t point_count(const QualityIndicator& indicator);

}  // namespace coopsense::quality
