#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the volume kernels. Every operation has a
// scalar reference implementation and, on x86-64, an AVX2 variant; the level
// is picked once at startup (PARCELQC_SIMD=scalar|avx2 overrides detection,
// clamped to what the CPU supports). Elementwise kernels produce bit-identical
// results at every level; the masked reductions reassociate sums and are
// equivalence-tested against the scalar path to tight tolerances.

namespace parcelqc::kernels {

enum class SimdLevel { scalar = 0, avx2 = 1 };

SimdLevel active_level();
const char* level_name(SimdLevel level);

struct MaskedSums {
    std::int64_t count = 0;
    double sum_a = 0.0;
    double sum_b = 0.0;
};

struct MaskedCentered {
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
};

struct PairCounts {
    std::int64_t in_gt = 0;
    std::int64_t in_pred = 0;
    std::int64_t in_both = 0;
};

/// dst[i] += src[i]
void add_rows(double* dst, const double* src, std::size_t n);
/// dst[i] -= src[i]
void sub_rows(double* dst, const double* src, std::size_t n);
/// out[i] = acc[i] / (counts[i] * count_yz)
void normalize_rows(double* out, const double* acc, const double* counts, double count_yz,
                    std::size_t n);

/// Count and plain sums of a, b over voxels where mask > 0.
MaskedSums masked_sums(const float* a, const float* b, const std::uint16_t* mask, std::size_t n);

/// Centered second moments of a, b over voxels where mask > 0.
MaskedCentered masked_centered(const float* a, const float* b, const std::uint16_t* mask,
                               std::size_t n, double mean_a, double mean_b);

/// Occurrence counts of `label` in gt, in pred, and in both at once.
PairCounts count_label_pair(const std::uint16_t* gt, const std::uint16_t* pred, std::size_t n,
                            std::uint16_t label);

/// One Voronoi relaxation row: d2 = base_d2 + (x_mm[i] - seed_x_mm)^2, and
/// best_d2/best_index are replaced where d2 is strictly smaller. Processing
/// seeds in ascending index therefore resolves ties to the lowest index.
void nearest_seed_row(const float* x_mm, std::size_t n, float seed_x_mm, float base_d2,
                      std::int32_t seed_index, float* best_d2, std::int32_t* best_index);

namespace scalar {
void add_rows(double* dst, const double* src, std::size_t n);
void sub_rows(double* dst, const double* src, std::size_t n);
void normalize_rows(double* out, const double* acc, const double* counts, double count_yz,
                    std::size_t n);
MaskedSums masked_sums(const float* a, const float* b, const std::uint16_t* mask, std::size_t n);
MaskedCentered masked_centered(const float* a, const float* b, const std::uint16_t* mask,
                               std::size_t n, double mean_a, double mean_b);
PairCounts count_label_pair(const std::uint16_t* gt, const std::uint16_t* pred, std::size_t n,
                            std::uint16_t label);
void nearest_seed_row(const float* x_mm, std::size_t n, float seed_x_mm, float base_d2,
                      std::int32_t seed_index, float* best_d2, std::int32_t* best_index);
} // namespace scalar

#if defined(PARCELQC_HAVE_AVX2)
namespace avx2 {
void add_rows(double* dst, const double* src, std::size_t n);
void sub_rows(double* dst, const double* src, std::size_t n);
void normalize_rows(double* out, const double* acc, const double* counts, double count_yz,
                    std::size_t n);
MaskedSums masked_sums(const float* a, const float* b, const std::uint16_t* mask, std::size_t n);
MaskedCentered masked_centered(const float* a, const float* b, const std::uint16_t* mask,
                               std::size_t n, double mean_a, double mean_b);
PairCounts count_label_pair(const std::uint16_t* gt, const std::uint16_t* pred, std::size_t n,
                            std::uint16_t label);
void nearest_seed_row(const float* x_mm, std::size_t n, float seed_x_mm, float base_d2,
                      std::int32_t seed_index, float* best_d2, std::int32_t* best_index);
} // namespace avx2
#endif

} // namespace parcelqc::kernels
