#include "parcelqc/kernels.hpp"

#if defined(PARCELQC_HAVE_AVX2)

#include <immintrin.h>

// AVX2 variants. Elementwise kernels (add/sub/normalize/nearest_seed_row)
// perform the exact same per-element operations as the scalar reference and
// must produce bit-identical output; this TU is built with -ffp-contract=off
// so mul+add pairs are not fused behind our back. The masked reductions
// accumulate per lane and differ from scalar only by summation order.

namespace parcelqc::kernels::avx2 {

namespace {

inline double hsum4(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

} // namespace

void add_rows(double* dst, const double* src, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
    }
    for (; i < n; ++i) dst[i] += src[i];
}

void sub_rows(double* dst, const double* src, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
    }
    for (; i < n; ++i) dst[i] -= src[i];
}

void normalize_rows(double* out, const double* acc, const double* counts, double count_yz,
                    std::size_t n) {
    const __m256d cyz = _mm256_set1_pd(count_yz);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d total = _mm256_mul_pd(_mm256_loadu_pd(counts + i), cyz);
        _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(acc + i), total));
    }
    for (; i < n; ++i) out[i] = acc[i] / (counts[i] * count_yz);
}

MaskedSums masked_sums(const float* a, const float* b, const std::uint16_t* mask, std::size_t n) {
    MaskedSums r;
    __m256d sa0 = _mm256_setzero_pd(), sa1 = _mm256_setzero_pd();
    __m256d sb0 = _mm256_setzero_pd(), sb1 = _mm256_setzero_pd();
    const __m128i zero16 = _mm_setzero_si128();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i m16 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(mask + i));
        const __m128i eq0_16 = _mm_cmpeq_epi16(m16, zero16);
        const __m256i eq0_32 = _mm256_cvtepi16_epi32(eq0_16);
        const __m256 eq0_ps = _mm256_castsi256_ps(eq0_32);

        const __m256 av = _mm256_andnot_ps(eq0_ps, _mm256_loadu_ps(a + i));
        const __m256 bv = _mm256_andnot_ps(eq0_ps, _mm256_loadu_ps(b + i));

        r.count += 8 - __builtin_popcount(static_cast<unsigned>(_mm256_movemask_ps(eq0_ps)));

        sa0 = _mm256_add_pd(sa0, _mm256_cvtps_pd(_mm256_castps256_ps128(av)));
        sa1 = _mm256_add_pd(sa1, _mm256_cvtps_pd(_mm256_extractf128_ps(av, 1)));
        sb0 = _mm256_add_pd(sb0, _mm256_cvtps_pd(_mm256_castps256_ps128(bv)));
        sb1 = _mm256_add_pd(sb1, _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1)));
    }
    r.sum_a = hsum4(_mm256_add_pd(sa0, sa1));
    r.sum_b = hsum4(_mm256_add_pd(sb0, sb1));
    for (; i < n; ++i) {
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
    const __m256d ma = _mm256_set1_pd(mean_a);
    const __m256d mb = _mm256_set1_pd(mean_b);
    __m256d saa = _mm256_setzero_pd(), sbb = _mm256_setzero_pd(), sab = _mm256_setzero_pd();
    const __m128i zero16 = _mm_setzero_si128();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i m16 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(mask + i));
        const __m128i eq0_16 = _mm_cmpeq_epi16(m16, zero16);
        const __m128i active16 = _mm_andnot_si128(eq0_16, _mm_set1_epi16(-1));
        // Centering happens in double for every lane; the mask is applied
        // after so zeroed lanes contribute exactly nothing.
        const __m256d keep_lo = _mm256_castsi256_pd(_mm256_cvtepi16_epi64(active16));
        const __m256d keep_hi =
            _mm256_castsi256_pd(_mm256_cvtepi16_epi64(_mm_srli_si128(active16, 8)));

        const __m256 av = _mm256_loadu_ps(a + i);
        const __m256 bv = _mm256_loadu_ps(b + i);
        const __m256d a_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(av));
        const __m256d a_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(av, 1));
        const __m256d b_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(bv));
        const __m256d b_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1));

        const __m256d da_lo = _mm256_and_pd(_mm256_sub_pd(a_lo, ma), keep_lo);
        const __m256d da_hi = _mm256_and_pd(_mm256_sub_pd(a_hi, ma), keep_hi);
        const __m256d db_lo = _mm256_and_pd(_mm256_sub_pd(b_lo, mb), keep_lo);
        const __m256d db_hi = _mm256_and_pd(_mm256_sub_pd(b_hi, mb), keep_hi);

        saa = _mm256_add_pd(saa, _mm256_add_pd(_mm256_mul_pd(da_lo, da_lo), _mm256_mul_pd(da_hi, da_hi)));
        sbb = _mm256_add_pd(sbb, _mm256_add_pd(_mm256_mul_pd(db_lo, db_lo), _mm256_mul_pd(db_hi, db_hi)));
        sab = _mm256_add_pd(sab, _mm256_add_pd(_mm256_mul_pd(da_lo, db_lo), _mm256_mul_pd(da_hi, db_hi)));
    }
    r.saa = hsum4(saa);
    r.sbb = hsum4(sbb);
    r.sab = hsum4(sab);
    for (; i < n; ++i) {
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
    const __m256i lv = _mm256_set1_epi16(static_cast<short>(label));
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256i g = _mm256_cmpeq_epi16(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(gt + i)), lv);
        const __m256i p = _mm256_cmpeq_epi16(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(pred + i)), lv);
        // movemask yields two bits per 16-bit match.
        c.in_gt += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_epi8(g))) / 2;
        c.in_pred += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_epi8(p))) / 2;
        c.in_both += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_epi8(_mm256_and_si256(g, p)))) / 2;
    }
    for (; i < n; ++i) {
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
    const __m256 sx = _mm256_set1_ps(seed_x_mm);
    const __m256 base = _mm256_set1_ps(base_d2);
    const __m256i sidx = _mm256_set1_epi32(seed_index);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 dx = _mm256_sub_ps(_mm256_loadu_ps(x_mm + i), sx);
        const __m256 d2 = _mm256_add_ps(_mm256_mul_ps(dx, dx), base);
        const __m256 best = _mm256_loadu_ps(best_d2 + i);
        const __m256 lt = _mm256_cmp_ps(d2, best, _CMP_LT_OQ);
        _mm256_storeu_ps(best_d2 + i, _mm256_blendv_ps(best, d2, lt));
        const __m256i idx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(best_index + i));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(best_index + i),
                            _mm256_blendv_epi8(idx, sidx, _mm256_castps_si256(lt)));
    }
    for (; i < n; ++i) {
        const float dx = x_mm[i] - seed_x_mm;
        const float d2 = dx * dx + base_d2;
        if (d2 < best_d2[i]) {
            best_d2[i] = d2;
            best_index[i] = seed_index;
        }
    }
}

} // namespace parcelqc::kernels::avx2

#endif // PARCELQC_HAVE_AVX2
