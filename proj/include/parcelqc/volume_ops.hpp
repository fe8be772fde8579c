#pragma once

#include <cstdint>
#include <vector>

#include "parcelqc/volume.hpp"

namespace parcelqc {

struct RegionStats {
    int label = 0;
    std::int64_t voxel_count = 0;
    double median_intensity = 0.0;
};

/// Per-label median intensity, one entry per distinct nonzero label in
/// ascending label order. The median is the exact order statistic; even
/// counts average the two middle values. Throws on geometry mismatch or when
/// seg carries no nonzero label.
std::vector<RegionStats> region_medians(const Volume3D& intensity, const LabelMap& seg);

/// Mean over the (2r+1)^3 cube clipped to the grid, each voxel normalized by
/// its in-bounds neighbor count. Radius 0 is the identity.
Volume3D box_filter(const Volume3D& v, int radius);

/// Sample Pearson correlation of a and b over voxels where mask > 0.
/// Throws when fewer than two voxels are masked or either input has zero
/// variance over the mask.
double pearson_correlation(const Volume3D& a, const Volume3D& b, const LabelMap& mask);

namespace detail {

/// box_filter's accumulation path at full double precision, before the cast
/// to the float32 voxel type. Separable sliding-window sums divided by the
/// exact in-bounds counts.
std::vector<double> box_filter_means(const Volume3D& v, int radius);

} // namespace detail

} // namespace parcelqc
