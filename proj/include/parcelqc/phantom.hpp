#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "parcelqc/volume.hpp"

namespace parcelqc {

/// Recipe for a synthetic parcellated "brain": a Voronoi parcellation of an
/// ellipsoid plus piecewise-constant intensities with optional Gaussian
/// noise. Everything downstream of the seed is deterministic.
struct PhantomSpec {
    std::array<int, 3> dims{96, 112, 96};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int n_parcels = 132;
    std::array<double, 3> semi_axes{40.0, 48.0, 40.0}; // ellipsoid mask, voxels

    struct IntensityEntry {
        int label = 0;
        double mean = 0.0;
        double stddev = 0.0;
    };
    /// Per-label overrides; labels not listed use means evenly spaced over
    /// [10, 250] and stddev = noise_stddev.
    std::vector<IntensityEntry> intensity_table;

    double noise_stddev = 0.0;
    std::uint64_t seed = 0;
};

struct Phantom {
    LabelMap labels;
    Volume3D flair;
};

/// Loads a phantom spec from JSON; absent fields keep their defaults.
PhantomSpec load_phantom_spec(const std::string& path);

/// Samples n_parcels seed points uniformly inside the ellipsoid and assigns
/// every in-mask voxel to its nearest seed (ties to the lowest seed index).
/// Labels run 1..n_parcels; out-of-mask voxels are 0 in both outputs.
Phantom generate_phantom(const PhantomSpec& spec, int threads = 1);

/// Nearest-neighbor resampling of the labels under a translation followed by
/// a rotation about the grid center (z axis); voxels that map outside the
/// source grid become 0.
LabelMap inject_misalignment(const LabelMap& m, std::array<int, 3> shift_vox,
                             double rot_z_degrees);

/// Adds `delta` to the intensity inside the union of n_lesions spherical
/// blobs, restricted to voxels whose label is in host_labels. Blob centers
/// are sampled uniformly over the host voxels. Throws when no host voxel
/// exists.
Volume3D inject_lesions(const Volume3D& v, const LabelMap& m, const std::vector<int>& host_labels,
                        int n_lesions, int radius_vox, double delta, std::uint64_t seed);

} // namespace parcelqc
