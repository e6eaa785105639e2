// Compiled with -mavx2 -mfma; only reached after a runtime CPUID check.

#include <immintrin.h>

#include "gfn/kernels/kernels.hpp"

namespace gfn::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

// One input row against four weight rows at a time.
void gemm_nt_avx2(const double* x, const double* w, double* y, std::size_t n, std::size_t k,
                  std::size_t m) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * k;
    double* yr = y + r * m;
    std::size_t o = 0;
    for (; o + 4 <= m; o += 4) {
      const double* w0 = w + o * k;
      const double* w1 = w0 + k;
      const double* w2 = w1 + k;
      const double* w3 = w2 + k;
      __m256d a0 = _mm256_setzero_pd();
      __m256d a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd();
      __m256d a3 = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= k; i += 4) {
        const __m256d xv = _mm256_loadu_pd(xr + i);
        a0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w0 + i), a0);
        a1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w1 + i), a1);
        a2 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w2 + i), a2);
        a3 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w3 + i), a3);
      }
      double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (; i < k; ++i) {
        s0 += xr[i] * w0[i];
        s1 += xr[i] * w1[i];
        s2 += xr[i] * w2[i];
        s3 += xr[i] * w3[i];
      }
      yr[o] = s0;
      yr[o + 1] = s1;
      yr[o + 2] = s2;
      yr[o + 3] = s3;
    }
    for (; o < m; ++o) yr[o] = dot_avx2(xr, w + o * k, k);
  }
}

// Register-blocked along k: a 16-wide strip of dx stays in registers while
// the contraction over m runs.
void gemm_nn_acc_avx2(const double* dy, const double* w, double* dx, std::size_t n, std::size_t m,
                      std::size_t k) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* dyr = dy + r * m;
    double* dxr = dx + r * k;
    std::size_t i = 0;
    for (; i + 16 <= k; i += 16) {
      __m256d c0 = _mm256_loadu_pd(dxr + i);
      __m256d c1 = _mm256_loadu_pd(dxr + i + 4);
      __m256d c2 = _mm256_loadu_pd(dxr + i + 8);
      __m256d c3 = _mm256_loadu_pd(dxr + i + 12);
      for (std::size_t o = 0; o < m; ++o) {
        const __m256d g = _mm256_set1_pd(dyr[o]);
        const double* wo = w + o * k + i;
        c0 = _mm256_fmadd_pd(g, _mm256_loadu_pd(wo), c0);
        c1 = _mm256_fmadd_pd(g, _mm256_loadu_pd(wo + 4), c1);
        c2 = _mm256_fmadd_pd(g, _mm256_loadu_pd(wo + 8), c2);
        c3 = _mm256_fmadd_pd(g, _mm256_loadu_pd(wo + 12), c3);
      }
      _mm256_storeu_pd(dxr + i, c0);
      _mm256_storeu_pd(dxr + i + 4, c1);
      _mm256_storeu_pd(dxr + i + 8, c2);
      _mm256_storeu_pd(dxr + i + 12, c3);
    }
    for (; i + 4 <= k; i += 4) {
      __m256d c0 = _mm256_loadu_pd(dxr + i);
      for (std::size_t o = 0; o < m; ++o) {
        c0 = _mm256_fmadd_pd(_mm256_set1_pd(dyr[o]), _mm256_loadu_pd(w + o * k + i), c0);
      }
      _mm256_storeu_pd(dxr + i, c0);
    }
    for (; i < k; ++i) {
      double acc = dxr[i];
      for (std::size_t o = 0; o < m; ++o) acc += dyr[o] * w[o * k + i];
      dxr[i] = acc;
    }
  }
}

void gemm_tn_acc_avx2(const double* dy, const double* x, double* dw, std::size_t n, std::size_t m,
                      std::size_t k) {
  for (std::size_t o = 0; o < m; ++o) {
    double* dwo = dw + o * k;
    std::size_t i = 0;
    for (; i + 16 <= k; i += 16) {
      __m256d c0 = _mm256_loadu_pd(dwo + i);
      __m256d c1 = _mm256_loadu_pd(dwo + i + 4);
      __m256d c2 = _mm256_loadu_pd(dwo + i + 8);
      __m256d c3 = _mm256_loadu_pd(dwo + i + 12);
      for (std::size_t r = 0; r < n; ++r) {
        const double gs = dy[r * m + o];
        if (gs == 0.0) continue;
        const __m256d g = _mm256_set1_pd(gs);
        const double* xr = x + r * k + i;
        c0 = _mm256_fmadd_pd(g, _mm256_loadu_pd(xr), c0);
        c1 = _mm256_fmadd_pd(g, _mm256_loadu_pd(xr + 4), c1);
        c2 = _mm256_fmadd_pd(g, _mm256_loadu_pd(xr + 8), c2);
        c3 = _mm256_fmadd_pd(g, _mm256_loadu_pd(xr + 12), c3);
      }
      _mm256_storeu_pd(dwo + i, c0);
      _mm256_storeu_pd(dwo + i + 4, c1);
      _mm256_storeu_pd(dwo + i + 8, c2);
      _mm256_storeu_pd(dwo + i + 12, c3);
    }
    for (; i + 4 <= k; i += 4) {
      __m256d c0 = _mm256_loadu_pd(dwo + i);
      for (std::size_t r = 0; r < n; ++r) {
        c0 = _mm256_fmadd_pd(_mm256_set1_pd(dy[r * m + o]), _mm256_loadu_pd(x + r * k + i), c0);
      }
      _mm256_storeu_pd(dwo + i, c0);
    }
    for (; i < k; ++i) {
      double acc = dwo[i];
      for (std::size_t r = 0; r < n; ++r) acc += dy[r * m + o] * x[r * k + i];
      dwo[i] = acc;
    }
  }
}

void adam_update_avx2(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoefficients& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d one_b1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d one_b2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d inv_bc1 = _mm256_set1_pd(1.0 / c.bias_correction1);
  const __m256d inv_bc2 = _mm256_set1_pd(1.0 / c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(one_b1, g));
    const __m256d vi =
        _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(one_b2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_bc2)), eps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mi, inv_bc1)), denom);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  if (i < n) scalar_table().adam_update(param + i, grad + i, m + i, v + i, n - i, c);
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{Backend::Avx2,   dot_avx2,         axpy_avx2,
                                 gemm_nt_avx2,    gemm_nn_acc_avx2, gemm_tn_acc_avx2,
                                 adam_update_avx2};
  return table;
}

}  // namespace gfn::kernels::detail
