#include "parcelqc/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace parcelqc::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(PARCELQC_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

SimdLevel detect_level() {
    const SimdLevel best = cpu_has_avx2() ? SimdLevel::avx2 : SimdLevel::scalar;
    if (const char* env = std::getenv("PARCELQC_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return SimdLevel::scalar;
        if (std::strcmp(env, "avx2") == 0) return best; // clamped to CPU support
    }
    return best;
}

} // namespace

SimdLevel active_level() {
    static const SimdLevel level = detect_level();
    return level;
}

const char* level_name(SimdLevel level) {
    switch (level) {
        case SimdLevel::avx2: return "avx2";
        case SimdLevel::scalar: break;
    }
    return "scalar";
}

#if defined(PARCELQC_HAVE_AVX2)
#define PARCELQC_DISPATCH(fn, ...) \
    (active_level() == SimdLevel::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define PARCELQC_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void add_rows(double* dst, const double* src, std::size_t n) {
    PARCELQC_DISPATCH(add_rows, dst, src, n);
}

void sub_rows(double* dst, const double* src, std::size_t n) {
    PARCELQC_DISPATCH(sub_rows, dst, src, n);
}

void normalize_rows(double* out, const double* acc, const double* counts, double count_yz,
                    std::size_t n) {
    PARCELQC_DISPATCH(normalize_rows, out, acc, counts, count_yz, n);
}

MaskedSums masked_sums(const float* a, const float* b, const std::uint16_t* mask, std::size_t n) {
    return PARCELQC_DISPATCH(masked_sums, a, b, mask, n);
}

MaskedCentered masked_centered(const float* a, const float* b, const std::uint16_t* mask,
                               std::size_t n, double mean_a, double mean_b) {
    return PARCELQC_DISPATCH(masked_centered, a, b, mask, n, mean_a, mean_b);
}

PairCounts count_label_pair(const std::uint16_t* gt, const std::uint16_t* pred, std::size_t n,
                            std::uint16_t label) {
    return PARCELQC_DISPATCH(count_label_pair, gt, pred, n, label);
}

void nearest_seed_row(const float* x_mm, std::size_t n, float seed_x_mm, float base_d2,
                      std::int32_t seed_index, float* best_d2, std::int32_t* best_index) {
    PARCELQC_DISPATCH(nearest_seed_row, x_mm, n, seed_x_mm, base_d2, seed_index, best_d2,
                      best_index);
}

} // namespace parcelqc::kernels
