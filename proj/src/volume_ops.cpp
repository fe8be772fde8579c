#include "parcelqc/volume_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "parcelqc/error.hpp"
#include "parcelqc/kernels.hpp"

namespace parcelqc {

namespace {

constexpr std::size_t kLabelRange = 65536;

void require_same_geometry(const VolumeGeometry& a, const VolumeGeometry& b, const char* what) {
    if (!geometry_match(a, b)) throw Error(std::string("geometry mismatch: ") + what);
}

// In-bounds window lengths along one axis, as exact small integers in double.
std::vector<double> window_counts(int n, int radius) {
    std::vector<double> counts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - radius);
        const int hi = std::min(n - 1, i + radius);
        counts[static_cast<std::size_t>(i)] = static_cast<double>(hi - lo + 1);
    }
    return counts;
}

} // namespace

std::vector<RegionStats> region_medians(const Volume3D& intensity, const LabelMap& seg) {
    require_same_geometry(intensity.geometry, seg.geometry, "intensity vs segmentation");
    const std::size_t n = seg.labels.size();

    std::vector<std::int64_t> counts(kLabelRange, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[seg.labels[i]];

    std::vector<std::size_t> offsets(kLabelRange, 0);
    std::size_t total = 0;
    for (std::size_t l = 1; l < kLabelRange; ++l) {
        offsets[l] = total;
        total += static_cast<std::size_t>(counts[l]);
    }
    if (total == 0) throw Error("segmentation has no nonzero labels");

    std::vector<float> bucketed(total);
    std::vector<std::size_t> cursor = offsets;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t l = seg.labels[i];
        if (l != 0) bucketed[cursor[l]++] = intensity.voxels[i];
    }

    std::vector<RegionStats> stats;
    for (std::size_t l = 1; l < kLabelRange; ++l) {
        const auto c = static_cast<std::size_t>(counts[l]);
        if (c == 0) continue;
        float* begin = bucketed.data() + offsets[l];
        float* end = begin + c;
        const std::size_t k = c / 2;
        std::nth_element(begin, begin + k, end);
        double median;
        if (c % 2 == 1) {
            median = static_cast<double>(begin[k]);
        } else {
            const double upper = static_cast<double>(begin[k]);
            const double lower = static_cast<double>(*std::max_element(begin, begin + k));
            median = 0.5 * (lower + upper);
        }
        stats.push_back({static_cast<int>(l), counts[l], median});
    }
    return stats;
}

namespace detail {

std::vector<double> box_filter_means(const Volume3D& v, int radius) {
    if (radius < 0) throw Error("box filter radius must be >= 0");
    const int nx = v.geometry.dims[0];
    const int ny = v.geometry.dims[1];
    const int nz = v.geometry.dims[2];
    const std::size_t snx = static_cast<std::size_t>(nx);
    const std::size_t nxy = snx * static_cast<std::size_t>(ny);
    const std::size_t n = v.geometry.voxel_count();

    std::vector<double> a(n);
    std::vector<double> b(n);

    // Pass along x: sliding window per contiguous row.
    for (std::size_t row = 0; row < n / snx; ++row) {
        const float* in = v.voxels.data() + row * snx;
        double* out = a.data() + row * snx;
        double acc = 0.0;
        const int head = std::min(radius, nx - 1);
        for (int u = 0; u <= head; ++u) acc += static_cast<double>(in[u]);
        for (int x = 0; x < nx; ++x) {
            out[x] = acc;
            const int add = x + radius + 1;
            if (add < nx) acc += static_cast<double>(in[add]);
            const int rem = x - radius;
            if (rem >= 0) acc -= static_cast<double>(in[rem]);
        }
    }

    // Pass along y: whole x-rows enter and leave the window.
    {
        std::vector<double> acc(snx);
        for (int z = 0; z < nz; ++z) {
            const double* slab_in = a.data() + static_cast<std::size_t>(z) * nxy;
            double* slab_out = b.data() + static_cast<std::size_t>(z) * nxy;
            std::fill(acc.begin(), acc.end(), 0.0);
            const int head = std::min(radius, ny - 1);
            for (int u = 0; u <= head; ++u)
                kernels::add_rows(acc.data(), slab_in + static_cast<std::size_t>(u) * snx, snx);
            for (int y = 0; y < ny; ++y) {
                std::memcpy(slab_out + static_cast<std::size_t>(y) * snx, acc.data(),
                            snx * sizeof(double));
                const int add = y + radius + 1;
                if (add < ny)
                    kernels::add_rows(acc.data(), slab_in + static_cast<std::size_t>(add) * snx, snx);
                const int rem = y - radius;
                if (rem >= 0)
                    kernels::sub_rows(acc.data(), slab_in + static_cast<std::size_t>(rem) * snx, snx);
            }
        }
    }

    // Pass along z: whole xy-planes.
    {
        std::vector<double> acc(nxy);
        std::fill(acc.begin(), acc.end(), 0.0);
        const int head = std::min(radius, nz - 1);
        for (int u = 0; u <= head; ++u)
            kernels::add_rows(acc.data(), b.data() + static_cast<std::size_t>(u) * nxy, nxy);
        for (int z = 0; z < nz; ++z) {
            std::memcpy(a.data() + static_cast<std::size_t>(z) * nxy, acc.data(),
                        nxy * sizeof(double));
            const int add = z + radius + 1;
            if (add < nz)
                kernels::add_rows(acc.data(), b.data() + static_cast<std::size_t>(add) * nxy, nxy);
            const int rem = z - radius;
            if (rem >= 0)
                kernels::sub_rows(acc.data(), b.data() + static_cast<std::size_t>(rem) * nxy, nxy);
        }
    }

    // Normalize by the exact in-bounds count; a single division keeps the
    // result identical to sum/count.
    const std::vector<double> cx = window_counts(nx, radius);
    const std::vector<double> cy = window_counts(ny, radius);
    const std::vector<double> cz = window_counts(nz, radius);
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            const std::size_t row = static_cast<std::size_t>(z) * nxy + static_cast<std::size_t>(y) * snx;
            kernels::normalize_rows(b.data() + row, a.data() + row, cx.data(),
                                    cy[static_cast<std::size_t>(y)] * cz[static_cast<std::size_t>(z)],
                                    snx);
        }
    }
    return b;
}

} // namespace detail

Volume3D box_filter(const Volume3D& v, int radius) {
    const std::vector<double> means = detail::box_filter_means(v, radius);
    Volume3D out;
    out.geometry = v.geometry;
    out.voxels.resize(means.size());
    std::transform(means.begin(), means.end(), out.voxels.begin(),
                   [](double m) { return static_cast<float>(m); });
    return out;
}

double pearson_correlation(const Volume3D& a, const Volume3D& b, const LabelMap& mask) {
    require_same_geometry(a.geometry, b.geometry, "first vs second input");
    require_same_geometry(a.geometry, mask.geometry, "input vs mask");
    const std::size_t n = a.voxels.size();

    const kernels::MaskedSums sums =
        kernels::masked_sums(a.voxels.data(), b.voxels.data(), mask.labels.data(), n);
    if (sums.count < 2) throw Error("correlation mask too small (fewer than 2 voxels)");

    const double mean_a = sums.sum_a / static_cast<double>(sums.count);
    const double mean_b = sums.sum_b / static_cast<double>(sums.count);
    const kernels::MaskedCentered m = kernels::masked_centered(
        a.voxels.data(), b.voxels.data(), mask.labels.data(), n, mean_a, mean_b);

    if (m.saa <= 0.0) throw Error("zero variance over mask (first input)");
    if (m.sbb <= 0.0) throw Error("zero variance over mask (second input)");
    const double r = m.sab / std::sqrt(m.saa * m.sbb);
    return std::clamp(r, -1.0, 1.0);
}

} // namespace parcelqc
