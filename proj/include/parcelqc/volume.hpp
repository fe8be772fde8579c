#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace parcelqc {

using Affine4 = std::array<std::array<double, 4>, 4>;

inline Affine4 identity_affine() {
    return {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
}

/// Grid dimensions, voxel spacing in mm and the voxel-to-world affine.
/// All volumes handled by the library are assumed co-registered in a common
/// space, so pairwise operations only ever check geometry, never resample.
struct VolumeGeometry {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    Affine4 affine = identity_affine();

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }

    /// Diagonal affine built from the spacing, origin at zero.
    static VolumeGeometry with_spacing(std::array<int, 3> dims, std::array<double, 3> spacing) {
        VolumeGeometry g;
        g.dims = dims;
        g.spacing = spacing;
        g.affine = identity_affine();
        for (int i = 0; i < 3; ++i) g.affine[i][i] = spacing[i];
        return g;
    }

    /// Throws Error unless dims >= 1, spacing > 0 and the affine's last row
    /// is (0,0,0,1).
    void validate() const;
};

/// True iff dims are equal and spacing/affine entries agree within tol.
bool geometry_match(const VolumeGeometry& a, const VolumeGeometry& b, double tol = 1e-6);

/// Scalar intensity grid, 32-bit float, x-fastest ordering:
/// flat index = x + dims_x * (y + dims_y * z).
struct Volume3D {
    VolumeGeometry geometry;
    std::vector<float> voxels;

    static Volume3D zeros(const VolumeGeometry& g) {
        Volume3D v;
        v.geometry = g;
        v.voxels.assign(g.voxel_count(), 0.0f);
        return v;
    }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(geometry.dims[0]) *
                   (static_cast<std::size_t>(y) +
                    static_cast<std::size_t>(geometry.dims[1]) * static_cast<std::size_t>(z));
    }
    float at(int x, int y, int z) const { return voxels[index(x, y, z)]; }
    float& at(int x, int y, int z) { return voxels[index(x, y, z)]; }

    /// Throws Error unless voxel count matches the geometry and all values
    /// are finite.
    void validate() const;
};

/// Integer structure labels on the same grid layout; 0 is background.
struct LabelMap {
    VolumeGeometry geometry;
    std::vector<std::uint16_t> labels;

    static LabelMap zeros(const VolumeGeometry& g) {
        LabelMap m;
        m.geometry = g;
        m.labels.assign(g.voxel_count(), 0);
        return m;
    }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(geometry.dims[0]) *
                   (static_cast<std::size_t>(y) +
                    static_cast<std::size_t>(geometry.dims[1]) * static_cast<std::size_t>(z));
    }
    std::uint16_t at(int x, int y, int z) const { return labels[index(x, y, z)]; }
    std::uint16_t& at(int x, int y, int z) { return labels[index(x, y, z)]; }

    void validate() const;
};

} // namespace parcelqc
