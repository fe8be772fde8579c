#pragma once

// Shared helpers for building in-memory volumes and label maps in tests.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "parcelqc/volume.hpp"

namespace test_support {

inline parcelqc::VolumeGeometry geom(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0,
                                     double sz = 1.0) {
    return parcelqc::VolumeGeometry::with_spacing({nx, ny, nz}, {sx, sy, sz});
}

inline parcelqc::Volume3D volume_of(const parcelqc::VolumeGeometry& g,
                                    const std::vector<float>& values) {
    parcelqc::Volume3D v;
    v.geometry = g;
    v.voxels = values;
    return v;
}

inline parcelqc::LabelMap labelmap_of(const parcelqc::VolumeGeometry& g,
                                      const std::vector<std::uint16_t>& labels) {
    parcelqc::LabelMap m;
    m.geometry = g;
    m.labels = labels;
    return m;
}

inline parcelqc::Volume3D random_volume(const parcelqc::VolumeGeometry& g, std::uint32_t seed,
                                        float lo = 0.0f, float hi = 100.0f) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    parcelqc::Volume3D v = parcelqc::Volume3D::zeros(g);
    for (auto& x : v.voxels) x = dist(gen);
    return v;
}

inline parcelqc::LabelMap random_labelmap(const parcelqc::VolumeGeometry& g, std::uint32_t seed,
                                          int max_label) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> dist(0, max_label);
    parcelqc::LabelMap m = parcelqc::LabelMap::zeros(g);
    for (auto& l : m.labels) l = static_cast<std::uint16_t>(dist(gen));
    return m;
}

} // namespace test_support
