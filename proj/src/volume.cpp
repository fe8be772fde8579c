#include "parcelqc/volume.hpp"

#include <cmath>
#include <string>

#include "parcelqc/error.hpp"

namespace parcelqc {

void VolumeGeometry::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (dims[i] < 1) throw Error("geometry: dims must be >= 1");
        if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
            throw Error("geometry: spacing must be positive");
    }
    const Affine4& m = affine;
    if (m[3][0] != 0.0 || m[3][1] != 0.0 || m[3][2] != 0.0 || m[3][3] != 1.0)
        throw Error("geometry: affine last row must be (0,0,0,1)");
    for (const auto& row : m)
        for (double v : row)
            if (!std::isfinite(v)) throw Error("geometry: affine entries must be finite");
}

bool geometry_match(const VolumeGeometry& a, const VolumeGeometry& b, double tol) {
    if (a.dims != b.dims) return false;
    for (int i = 0; i < 3; ++i)
        if (std::fabs(a.spacing[i] - b.spacing[i]) > tol) return false;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (std::fabs(a.affine[r][c] - b.affine[r][c]) > tol) return false;
    return true;
}

void Volume3D::validate() const {
    geometry.validate();
    if (voxels.size() != geometry.voxel_count())
        throw Error("volume: voxel count " + std::to_string(voxels.size()) +
                    " does not match geometry");
    for (float v : voxels)
        if (!std::isfinite(v)) throw Error("volume: non-finite voxel value");
}

void LabelMap::validate() const {
    geometry.validate();
    if (labels.size() != geometry.voxel_count())
        throw Error("label map: voxel count " + std::to_string(labels.size()) +
                    " does not match geometry");
}

} // namespace parcelqc
