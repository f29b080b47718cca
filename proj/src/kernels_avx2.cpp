#include "covtest/kernels.hpp"

// AVX2/FMA kernels on the interleaved (re, im) layout of std::complex<double>;
// one __m256d holds two complex values. This translation unit is compiled
// with -mavx2 -mfma and only entered when the CPU reports both features.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace covtest::kernels {
namespace {

// (x1, x0, x3, x2): swaps re/im within each complex lane.
inline __m256d swap_ri(__m256d x) { return _mm256_permute_pd(x, 0x5); }
// (x0, x0, x2, x2): broadcasts the real parts.
inline __m256d dup_re(__m256d x) { return _mm256_movedup_pd(x); }
// (x1, x1, x3, x3): broadcasts the imaginary parts.
inline __m256d dup_im(__m256d x) { return _mm256_permute_pd(x, 0xF); }

inline __m256d conj_mask() { return _mm256_set_pd(-0.0, 0.0, -0.0, 0.0); }

void matvec_avx2(const cdouble* a, std::size_t m, std::size_t n, const cdouble* x,
                 cdouble* y) {
    const double* xp = reinterpret_cast<const double*>(x);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ap = reinterpret_cast<const double*>(a + i * n);
        __m256d acc_a = _mm256_setzero_pd();
        __m256d acc_b = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            const __m256d av = _mm256_loadu_pd(ap + 2 * j);
            const __m256d xv = _mm256_loadu_pd(xp + 2 * j);
            acc_a = _mm256_fmadd_pd(av, dup_re(xv), acc_a);
            acc_b = _mm256_fmadd_pd(swap_ri(av), dup_im(xv), acc_b);
        }
        // (ar*xr - ai*xi, ai*xr + ar*xi) summed over both complex lanes
        const __m256d s = _mm256_addsub_pd(acc_a, acc_b);
        const __m128d lo = _mm256_castpd256_pd128(s);
        const __m128d hi = _mm256_extractf128_pd(s, 1);
        const __m128d sum = _mm_add_pd(lo, hi);
        double sr = _mm_cvtsd_f64(sum);
        double si = _mm_cvtsd_f64(_mm_unpackhi_pd(sum, sum));
        for (; j < n; ++j) {
            const double ar = ap[2 * j], ai = ap[2 * j + 1];
            const double xr = xp[2 * j], xi = xp[2 * j + 1];
            sr += ar * xr - ai * xi;
            si += ar * xi + ai * xr;
        }
        y[i] = {sr, si};
    }
}

inline void axpy_body(double wr, double wi, const double* xp, double* yp, std::size_t n,
                      bool conj_x) {
    const __m256d wre = _mm256_set1_pd(wr);
    const __m256d wim = _mm256_set1_pd(wi);
    const __m256d mask = conj_mask();
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * j);
        if (conj_x) xv = _mm256_xor_pd(xv, mask);
        const __m256d yv = _mm256_loadu_pd(yp + 2 * j);
        const __m256d t = _mm256_addsub_pd(_mm256_fmadd_pd(wre, xv, yv),
                                           _mm256_mul_pd(wim, swap_ri(xv)));
        _mm256_storeu_pd(yp + 2 * j, t);
    }
    for (; j < n; ++j) {
        const double xr = xp[2 * j];
        const double xi = conj_x ? -xp[2 * j + 1] : xp[2 * j + 1];
        yp[2 * j] += wr * xr - wi * xi;
        yp[2 * j + 1] += wr * xi + wi * xr;
    }
}

void axpy_avx2(cdouble w, const cdouble* x, cdouble* y, std::size_t n) {
    axpy_body(w.real(), w.imag(), reinterpret_cast<const double*>(x),
              reinterpret_cast<double*>(y), n, false);
}

void axpy_conj_avx2(cdouble w, const cdouble* x, cdouble* y, std::size_t n) {
    axpy_body(w.real(), w.imag(), reinterpret_cast<const double*>(x),
              reinterpret_cast<double*>(y), n, true);
}

void matmul_acc_avx2(const cdouble* a, const cdouble* b, cdouble* c, std::size_t m,
                     std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        cdouble* ci = c + i * n;
        const cdouble* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            axpy_avx2(ai[p], b + p * n, ci, n);
        }
    }
}

void herk_upper_avx2(const cdouble* x, std::size_t n, cdouble* r) {
    for (std::size_t i = 0; i < n; ++i) {
        axpy_conj_avx2(x[i], x + i, r + i * n + i, n - i);
    }
}

double frob_sq_avx2(const cdouble* x, std::size_t n) {
    const double* xp = reinterpret_cast<const double*>(x);
    const std::size_t nd = 2 * n;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= nd; j += 4) {
        const __m256d v = _mm256_loadu_pd(xp + j);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d sum2 = _mm_add_pd(lo, hi);
    double s = _mm_cvtsd_f64(sum2) + _mm_cvtsd_f64(_mm_unpackhi_pd(sum2, sum2));
    for (; j < nd; ++j) s += xp[j] * xp[j];
    return s;
}

const Ops kAvx2Ops = {
    "avx2", matvec_avx2, axpy_avx2, axpy_conj_avx2,
    matmul_acc_avx2, herk_upper_avx2, frob_sq_avx2,
};

}  // namespace

namespace detail {
const Ops* avx2_table() { return &kAvx2Ops; }
}

}  // namespace covtest::kernels

#else

namespace covtest::kernels::detail {
const Ops* avx2_table() { return nullptr; }
}

#endif
