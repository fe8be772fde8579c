#include "parcelqc/kernels.hpp"

// Reference implementations. These define the semantics the SIMD variants
// are tested against; keep them straightforward.

namespace parcelqc::kernels::scalar {

void add_rows(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void sub_rows(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] -= src[i];
}

void normalize_rows(double* out, const double* acc, const double* counts, double count_yz,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = acc[i] / (counts[i] * count_yz);
}

MaskedSums masked_sums(const float* a, const float* b, const std::uint16_t* mask, std::size_t n) {
    MaskedSums r;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i] > 0) {
            ++r.count;
            r.sum_a += static_cast<double>(a[i]);
            r.sum_b += static_cast<double>(b[i]);
        }
    }
    return r;
}

MaskedCentered masked_centered(const float* a, const float* b, const std::uint16_t* mask,
                               std::size_t n, double mean_a, double mean_b) {
    MaskedCentered r;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i] > 0) {
            const double da = static_cast<double>(a[i]) - mean_a;
            const double db = static_cast<double>(b[i]) - mean_b;
            r.saa += da * da;
            r.sbb += db * db;
            r.sab += da * db;
        }
    }
    return r;
}

PairCounts count_label_pair(const std::uint16_t* gt, const std::uint16_t* pred, std::size_t n,
                            std::uint16_t label) {
    PairCounts c;
    for (std::size_t i = 0; i < n; ++i) {
        const bool g = gt[i] == label;
        const bool p = pred[i] == label;
        c.in_gt += g;
        c.in_pred += p;
        c.in_both += g && p;
    }
    return c;
}

void nearest_seed_row(const float* x_mm, std::size_t n, float seed_x_mm, float base_d2,
                      std::int32_t seed_index, float* best_d2, std::int32_t* best_index) {
    for (std::size_t i = 0; i < n; ++i) {
        const float dx = x_mm[i] - seed_x_mm;
        const float d2 = dx * dx + base_d2;
        if (d2 < best_d2[i]) {
            best_d2[i] = d2;
            best_index[i] = seed_index;
        }
    }
}

} // namespace parcelqc::kernels::scalar
