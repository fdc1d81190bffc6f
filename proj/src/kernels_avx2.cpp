// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "dko/kernels.hpp"

#ifdef DKO_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cmath>

namespace dko::kernels::avx2 {

namespace {

inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double sum(std::span<const double> a) noexcept {
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a.data() + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a.data() + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a.data() + i));
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i];
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) noexcept {
    const std::size_t n = w.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), _mm256_loadu_pd(a.data() + i));
        acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b.data() + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * a[i] * b[i];
    return s;
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) noexcept {
    const __m256d sign_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
    const std::size_t m = b.size();
    double total = 0.0;
    for (double x : a) {
        const __m256d xv = _mm256_set1_pd(x);
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 8 <= m; j += 8) {
            acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(b.data() + j)), sign_mask));
            acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(b.data() + j + 4)), sign_mask));
        }
        for (; j + 4 <= m; j += 4)
            acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(b.data() + j)), sign_mask));
        double row = hsum(_mm256_add_pd(acc0, acc1));
        for (; j < m; ++j) row += std::fabs(x - b[j]);
        total += row;
    }
    return total;
}

}  // namespace dko::kernels::avx2

#endif
