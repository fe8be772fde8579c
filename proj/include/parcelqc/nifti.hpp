#pragma once

#include <string>

#include "parcelqc/volume.hpp"

namespace parcelqc::nifti {

// NIfTI-1 single-file volumes (.nii), optionally gzip-compressed (.nii.gz).
// Supported on-disk datatypes: uint8, int16, int32, uint16, float32, float64.
// Both byte orders are read; files are written little-endian with a 348-byte
// header, vox_offset 352 and magic "n+1". Geometry comes from pixdim plus the
// sform when sform_code > 0, the quaternion qform otherwise.

/// Loads a 3D volume, converting to float32 and applying scl_slope/scl_inter
/// when scl_slope != 0.
Volume3D read_volume(const std::string& path);

/// Loads a 3D label map. Floating-point files are accepted only when every
/// value is integral within 1e-6; values must lie in [0, 65535].
LabelMap read_labelmap(const std::string& path);

/// Writes float32 voxel data. Gzip-compresses iff the path ends in ".gz".
void write_volume(const Volume3D& v, const std::string& path);

/// Writes uint16 label data. Gzip-compresses iff the path ends in ".gz".
void write_volume(const LabelMap& m, const std::string& path);

} // namespace parcelqc::nifti
