#include "parcelqc/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "parcelqc/error.hpp"
#include "parcelqc/kernels.hpp"
#include "parcelqc/parallel.hpp"
#include "parcelqc/rng.hpp"

namespace parcelqc {

namespace {

struct EllipsoidMask {
    std::array<double, 3> center;
    std::array<double, 3> inv_axes2;

    bool contains(int x, int y, int z) const {
        const double dx = x - center[0];
        const double dy = y - center[1];
        const double dz = z - center[2];
        return dx * dx * inv_axes2[0] + dy * dy * inv_axes2[1] + dz * dz * inv_axes2[2] <= 1.0;
    }
};

EllipsoidMask make_mask(const PhantomSpec& spec) {
    EllipsoidMask mask{};
    for (int i = 0; i < 3; ++i) {
        mask.center[i] = 0.5 * (spec.dims[i] - 1);
        mask.inv_axes2[i] = 1.0 / (spec.semi_axes[i] * spec.semi_axes[i]);
    }
    return mask;
}

void validate_spec(const PhantomSpec& spec) {
    for (int i = 0; i < 3; ++i) {
        if (spec.dims[i] < 1) throw Error("phantom: dims must be >= 1");
        if (!(spec.spacing[i] > 0.0)) throw Error("phantom: spacing must be positive");
        if (!(spec.semi_axes[i] > 0.0)) throw Error("phantom: semi-axes must be positive");
        if (spec.semi_axes[i] > 0.5 * spec.dims[i])
            throw Error("phantom: semi-axes must fit within the grid");
    }
    if (spec.n_parcels < 1) throw Error("phantom: n_parcels must be >= 1");
    if (spec.noise_stddev < 0.0) throw Error("phantom: noise_stddev must be >= 0");
    for (const auto& e : spec.intensity_table) {
        if (e.label < 1 || e.label > spec.n_parcels)
            throw Error("phantom: intensity_table label " + std::to_string(e.label) +
                        " outside 1..n_parcels");
        if (e.stddev < 0.0) throw Error("phantom: intensity_table stddev must be >= 0");
    }
}

} // namespace

PhantomSpec load_phantom_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid phantom spec JSON in " + path + ": " + e.what());
    }

    PhantomSpec spec;
    try {
        if (j.contains("dims")) spec.dims = j.at("dims").get<std::array<int, 3>>();
        if (j.contains("spacing")) spec.spacing = j.at("spacing").get<std::array<double, 3>>();
        if (j.contains("n_parcels")) spec.n_parcels = j.at("n_parcels").get<int>();
        if (j.contains("semi_axes"))
            spec.semi_axes = j.at("semi_axes").get<std::array<double, 3>>();
        if (j.contains("noise_stddev")) spec.noise_stddev = j.at("noise_stddev").get<double>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("intensity_table")) {
            for (const auto& entry : j.at("intensity_table")) {
                PhantomSpec::IntensityEntry e;
                e.label = entry.at("label").get<int>();
                e.mean = entry.at("mean").get<double>();
                e.stddev = entry.value("stddev", 0.0);
                spec.intensity_table.push_back(e);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid phantom spec in " + path + ": " + e.what());
    }
    return spec;
}

Phantom generate_phantom(const PhantomSpec& spec, int threads) {
    validate_spec(spec);
    const VolumeGeometry geometry = VolumeGeometry::with_spacing(spec.dims, spec.spacing);
    const EllipsoidMask mask = make_mask(spec);
    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];

    std::vector<std::size_t> in_mask;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (mask.contains(x, y, z))
                    in_mask.push_back(static_cast<std::size_t>(x) +
                                      static_cast<std::size_t>(nx) *
                                          (static_cast<std::size_t>(y) +
                                           static_cast<std::size_t>(ny) * static_cast<std::size_t>(z)));
    if (in_mask.empty()) throw Error("phantom: ellipsoid mask is empty");
    if (static_cast<std::size_t>(spec.n_parcels) > in_mask.size())
        throw Error("phantom: n_parcels exceeds in-mask voxel count (" +
                    std::to_string(in_mask.size()) + ")");

    // Distinct seed voxels via partial Fisher-Yates over the in-mask list.
    rng::Xoshiro256pp gen(spec.seed, rng::kStreamParcelSeeds);
    std::vector<std::array<float, 3>> seeds_mm(static_cast<std::size_t>(spec.n_parcels));
    for (std::size_t i = 0; i < seeds_mm.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(gen.below(in_mask.size() - i));
        std::swap(in_mask[i], in_mask[j]);
        const std::size_t flat = in_mask[i];
        const int sx = static_cast<int>(flat % static_cast<std::size_t>(nx));
        const int sy = static_cast<int>((flat / static_cast<std::size_t>(nx)) % static_cast<std::size_t>(ny));
        const int sz = static_cast<int>(flat / (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)));
        seeds_mm[i] = {static_cast<float>(sx * spec.spacing[0]),
                       static_cast<float>(sy * spec.spacing[1]),
                       static_cast<float>(sz * spec.spacing[2])};
    }

    Phantom phantom;
    phantom.labels = LabelMap::zeros(geometry);
    phantom.flair = Volume3D::zeros(geometry);

    std::vector<float> x_mm(static_cast<std::size_t>(nx));
    for (int x = 0; x < nx; ++x) x_mm[static_cast<std::size_t>(x)] =
        static_cast<float>(x * spec.spacing[0]);

    // Per-label intensity parameters.
    std::vector<double> means(static_cast<std::size_t>(spec.n_parcels) + 1, 0.0);
    std::vector<double> stddevs(static_cast<std::size_t>(spec.n_parcels) + 1, spec.noise_stddev);
    for (int l = 1; l <= spec.n_parcels; ++l) {
        means[static_cast<std::size_t>(l)] =
            spec.n_parcels == 1
                ? 10.0
                : 10.0 + (250.0 - 10.0) * static_cast<double>(l - 1) / (spec.n_parcels - 1);
    }
    for (const auto& e : spec.intensity_table) {
        means[static_cast<std::size_t>(e.label)] = e.mean;
        stddevs[static_cast<std::size_t>(e.label)] = e.stddev;
    }
    const std::uint64_t noise_stream = rng::derive_stream(spec.seed, rng::kStreamVoxelNoise);

    // Voronoi assignment, one z-slice at a time; each voxel's result depends
    // only on its own coordinates, so slice-level parallelism is safe.
    parallel_for(static_cast<std::size_t>(nz), threads, [&](std::size_t zi) {
        const int z = static_cast<int>(zi);
        std::vector<float> best_d2(static_cast<std::size_t>(nx));
        std::vector<std::int32_t> best_idx(static_cast<std::size_t>(nx));
        for (int y = 0; y < ny; ++y) {
            std::fill(best_d2.begin(), best_d2.end(), std::numeric_limits<float>::infinity());
            std::fill(best_idx.begin(), best_idx.end(), -1);
            for (std::size_t s = 0; s < seeds_mm.size(); ++s) {
                const float dy = static_cast<float>(y * spec.spacing[1]) - seeds_mm[s][1];
                const float dz = static_cast<float>(z * spec.spacing[2]) - seeds_mm[s][2];
                const float base = dy * dy + dz * dz;
                kernels::nearest_seed_row(x_mm.data(), x_mm.size(), seeds_mm[s][0], base,
                                          static_cast<std::int32_t>(s), best_d2.data(),
                                          best_idx.data());
            }
            const std::size_t row =
                static_cast<std::size_t>(nx) *
                (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * zi);
            for (int x = 0; x < nx; ++x) {
                if (!mask.contains(x, y, z)) continue;
                const std::size_t i = row + static_cast<std::size_t>(x);
                const auto label = static_cast<std::uint16_t>(best_idx[static_cast<std::size_t>(x)] + 1);
                phantom.labels.labels[i] = label;
                const double noise =
                    stddevs[label] > 0.0 ? stddevs[label] * rng::normal_at(noise_stream, i) : 0.0;
                phantom.flair.voxels[i] = static_cast<float>(means[label] + noise);
            }
        }
    });
    return phantom;
}

LabelMap inject_misalignment(const LabelMap& m, std::array<int, 3> shift_vox,
                             double rot_z_degrees) {
    const int nx = m.geometry.dims[0], ny = m.geometry.dims[1], nz = m.geometry.dims[2];
    const double cx = 0.5 * (nx - 1), cy = 0.5 * (ny - 1);
    const double theta = rot_z_degrees * 3.14159265358979323846 / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);

    LabelMap out = LabelMap::zeros(m.geometry);
    std::size_t i = 0;
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x, ++i) {
                // Inverse of translate-then-rotate-about-center: undo the
                // rotation, then the shift.
                const double qx = x - cx;
                const double qy = y - cy;
                const double ux = c * qx + s * qy + cx - shift_vox[0];
                const double uy = -s * qx + c * qy + cy - shift_vox[1];
                const double uz = static_cast<double>(z) - shift_vox[2];
                const auto sx = static_cast<long>(std::llround(ux));
                const auto sy = static_cast<long>(std::llround(uy));
                const auto sz = static_cast<long>(std::llround(uz));
                if (sx < 0 || sx >= nx || sy < 0 || sy >= ny || sz < 0 || sz >= nz) continue;
                out.labels[i] = m.at(static_cast<int>(sx), static_cast<int>(sy), static_cast<int>(sz));
            }
        }
    }
    return out;
}

Volume3D inject_lesions(const Volume3D& v, const LabelMap& m, const std::vector<int>& host_labels,
                        int n_lesions, int radius_vox, double delta, std::uint64_t seed) {
    if (!geometry_match(v.geometry, m.geometry)) throw Error("lesions: geometry mismatch");
    if (n_lesions < 0) throw Error("lesions: n_lesions must be >= 0");
    if (radius_vox < 0) throw Error("lesions: radius must be >= 0");

    std::array<bool, 65536> is_host{};
    for (int l : host_labels) {
        if (l < 1 || l > 65535) throw Error("lesions: host label out of range");
        is_host[static_cast<std::size_t>(l)] = true;
    }

    Volume3D out = v;
    if (n_lesions == 0) return out;

    std::vector<std::size_t> host_voxels;
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        if (is_host[m.labels[i]]) host_voxels.push_back(i);
    if (host_voxels.empty()) throw Error("lesions: no voxels carry a host label");

    const int nx = m.geometry.dims[0], ny = m.geometry.dims[1], nz = m.geometry.dims[2];
    rng::Xoshiro256pp gen(seed, rng::kStreamLesionCenters);

    // Union of blobs: each affected voxel is bumped by delta exactly once
    // even when blobs overlap.
    std::vector<bool> in_blob(m.labels.size(), false);
    const std::int64_t r2 = static_cast<std::int64_t>(radius_vox) * radius_vox;
    for (int lesion = 0; lesion < n_lesions; ++lesion) {
        const std::size_t center = host_voxels[gen.below(host_voxels.size())];
        const int cx = static_cast<int>(center % static_cast<std::size_t>(nx));
        const int cy = static_cast<int>((center / static_cast<std::size_t>(nx)) % static_cast<std::size_t>(ny));
        const int cz = static_cast<int>(center / (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)));
        for (int dz = -radius_vox; dz <= radius_vox; ++dz) {
            for (int dy = -radius_vox; dy <= radius_vox; ++dy) {
                for (int dx = -radius_vox; dx <= radius_vox; ++dx) {
                    if (static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy +
                            static_cast<std::int64_t>(dz) * dz >
                        r2)
                        continue;
                    const int x = cx + dx, y = cy + dy, z = cz + dz;
                    if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) continue;
                    in_blob[m.index(x, y, z)] = true;
                }
            }
        }
    }
    for (std::size_t i = 0; i < in_blob.size(); ++i)
        if (in_blob[i] && is_host[m.labels[i]])
            out.voxels[i] = static_cast<float>(static_cast<double>(out.voxels[i]) + delta);
    return out;
}

} // namespace parcelqc
