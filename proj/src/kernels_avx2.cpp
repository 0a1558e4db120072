// Compiled with -mavx2 -mfma. Never call into this TU unless the dispatcher
// has confirmed CPU support.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace lrmr::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq(const double* x, std::size_t n) { return dot(x, x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpby(double alpha, const double* x, double beta, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yb = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), yb));
  }
  for (; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void gemv_rows(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t i = 0;
  // four rows share each load of x
  for (; i + 4 <= rows; i += 4) {
    const double* r0 = a + i * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    __m256d s3 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d xv = _mm256_loadu_pd(x + j);
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + j), xv, s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + j), xv, s1);
      s2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + j), xv, s2);
      s3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + j), xv, s3);
    }
    double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
    for (; j < cols; ++j) {
      t0 += r0[j] * x[j];
      t1 += r1[j] * x[j];
      t2 += r2[j] * x[j];
      t3 += r3[j] * x[j];
    }
    y[i] = t0;
    y[i + 1] = t1;
    y[i + 2] = t2;
    y[i + 3] = t3;
  }
  for (; i < rows; ++i) y[i] = dot(a + i * cols, x, cols);
}

void gemv_rows_t(const double* a, std::size_t rows, std::size_t cols, const double* q,
                 double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const double* r0 = a + i * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    const __m256d q0 = _mm256_set1_pd(q[i]);
    const __m256d q1 = _mm256_set1_pd(q[i + 1]);
    const __m256d q2 = _mm256_set1_pd(q[i + 2]);
    const __m256d q3 = _mm256_set1_pd(q[i + 3]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d o = _mm256_loadu_pd(out + j);
      o = _mm256_fmadd_pd(q0, _mm256_loadu_pd(r0 + j), o);
      o = _mm256_fmadd_pd(q1, _mm256_loadu_pd(r1 + j), o);
      o = _mm256_fmadd_pd(q2, _mm256_loadu_pd(r2 + j), o);
      o = _mm256_fmadd_pd(q3, _mm256_loadu_pd(r3 + j), o);
      _mm256_storeu_pd(out + j, o);
    }
    for (; j < cols; ++j) {
      out[j] += q[i] * r0[j] + q[i + 1] * r1[j] + q[i + 2] * r2[j] + q[i + 3] * r3[j];
    }
  }
  for (; i < rows; ++i) axpy(q[i], a + i * cols, out, cols);
}

}  // namespace lrmr::kernels::avx2
