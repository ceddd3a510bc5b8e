#include "coopsense/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coopsense::quality {

PartitionResolution::PartitionResolution(int k) : K(k) {
    if (k < 1 || k > 4) throw std::invalid_argument("PartitionResolution: K must be in 1..4");
}

QualityIndicator compute_indicator(const scene::PointCloud& points,
                                   const scene::BoundingBox& box,
                                   PartitionResolution resolution) {
    const int K = resolution.K;
    if (K < 1 || K > 4) throw std::invalid_argument("compute_indicator: K must be in 1..4");
    if (box.lengths.x <= 0.0 || box.lengths.y <= 0.0 || box.lengths.z <= 0.0)
        throw std::invalid_argument("compute_indicator: box edges must be positive");

    QualityIndicator ind;
    ind.K = K;
    ind.counts.assign(K * K * K, 0);

    const double lo[3] = {box.min(0), box.min(1), box.min(2)};
    const double cell[3] = {box.lengths.x / K, box.lengths.y / K, box.lengths.z / K};
    for (const auto& p : points) {
        if (!box.contains(p))
            throw std::invalid_argument("compute_indicator: point outside the box");
        const double c[3] = {p.x, p.y, p.z};
        int idx[3];
        for (int axis = 0; axis < 3; ++axis) {
            int i = static_cast<int>(std::floor((c[axis] - lo[axis]) / cell[axis]));
            idx[axis] = std::clamp(i, 0, K - 1);
        }
        ind.counts[idx[0] + K * idx[1] + K * K * idx[2]] += 1;
    }
    return ind;
}

QualityIndicator fuse_indicators(const std::vector<std::uint8_t>& selection,
                                 const std::vector<QualityIndicator>& indicators) {
    if (selection.size() != indicators.size())
        throw std::invalid_argument("fuse_indicators: selection/indicator count mismatch");
    int K = 0;
    for (const auto& ind : indicators) {
        if (K == 0) K = ind.K;
        if (ind.K != K) throw std::invalid_argument("fuse_indicators: mixed resolutions");
    }
    if (K == 0) throw std::invalid_argument("fuse_indicators: no indicators");

    QualityIndicator fused;
    fused.K = K;
    fused.counts.assign(K * K * K, 0);
    for (std::size_t n = 0; n < indicators.size(); ++n) {
        if (!selection[n]) continue;
        for (std::size_t k = 0; k < fused.counts.size(); ++k)
            fused.counts[k] += indicators[n].counts[k];
    }
    return fused;
}

std::int64_t point_count(const QualityIndicator& indicator) {
    return std::accumulate(indicator.counts.begin(), indicator.counts.end(),
                           static_cast<std::int64_t>(0));
}

}  // namespace coopsense::quality
