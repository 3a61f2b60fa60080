// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma; nothing in it
// may run unless dispatch has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "tsmb/kernels.hpp"

namespace tsmb::kernels {
namespace {

// Cephes-style exp: round-to-nearest range reduction by ln 2 split in two
// parts, then a (2,3) Pade approximant on [-ln2/2, ln2/2]. Inputs are
// clamped to [-708, 709], which keeps the exponent construction normal.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212e-6), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878e-4), rr,
                               _mm256_set1_pd(3.02994407707441961300e-2));
  px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042e-6), rr,
                               _mm256_set1_pd(2.52448340349684104192e-3));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.00000000000000000009e0));

  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // 2^n by writing the biased exponent directly.
  const __m128i n32 = _mm256_cvtpd_epi32(fx);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(n64, 52));
  return _mm256_mul_pd(e, scale);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256i tail_mask(std::size_t remaining) {
  const std::int64_t r = static_cast<std::int64_t>(remaining);
  return _mm256_setr_epi64x(r > 0 ? -1 : 0, r > 1 ? -1 : 0, r > 2 ? -1 : 0, r > 3 ? -1 : 0);
}

double fcm_pair_sse_avx2(const double* weights, const double* rows, std::size_t n_rows,
                         std::size_t P, double tau) {
  if (n_rows < 2) return 0.0;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d neg_tau = _mm256_set1_pd(-tau);
  __m256d sse = _mm256_setzero_pd();
  for (std::size_t t = 0; t + 1 < n_rows; ++t) {
    const double* x = rows + t * P;
    const double* target = rows + (t + 1) * P;
    for (std::size_t ib = 0; ib < P; ib += 4) {
      const std::size_t remaining = P - ib;
      __m256d acc = _mm256_setzero_pd();
      if (remaining >= 4) {
        for (std::size_t j = 0; j < P; ++j)
          acc = _mm256_fmadd_pd(_mm256_loadu_pd(weights + j * P + ib), _mm256_set1_pd(x[j]), acc);
        const __m256d y = _mm256_div_pd(one, _mm256_add_pd(one, exp_pd(_mm256_mul_pd(neg_tau, acc))));
        const __m256d diff = _mm256_sub_pd(y, _mm256_loadu_pd(target + ib));
        sse = _mm256_fmadd_pd(diff, diff, sse);
      } else {
        const __m256i mask = tail_mask(remaining);
        for (std::size_t j = 0; j < P; ++j)
          acc = _mm256_fmadd_pd(_mm256_maskload_pd(weights + j * P + ib, mask),
                                _mm256_set1_pd(x[j]), acc);
        const __m256d y = _mm256_div_pd(one, _mm256_add_pd(one, exp_pd(_mm256_mul_pd(neg_tau, acc))));
        __m256d diff = _mm256_sub_pd(y, _mm256_maskload_pd(target + ib, mask));
        diff = _mm256_and_pd(diff, _mm256_castsi256_pd(mask));
        sse = _mm256_fmadd_pd(diff, diff, sse);
      }
    }
  }
  return hsum(sse);
}

double log_sum_exp_avx2(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  double m = -std::numeric_limits<double>::infinity();
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  }
  for (; i < n; ++i) m = std::max(m, x[i]);
  if (!std::isfinite(m)) return m;

  const __m256d vmax = _mm256_set1_pd(m);
  __m256d acc = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vmax)));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

void sq_dist_2d_avx2(const double* points, std::size_t n_points, const double* centroids,
                     std::size_t P, double* out) {
  for (std::size_t t = 0; t < n_points; ++t) {
    const double z = points[2 * t];
    const double dz = points[2 * t + 1];
    const __m256d p = _mm256_setr_pd(z, dz, z, dz);
    double* row = out + t * P;
    std::size_t k = 0;
    for (; k + 2 <= P; k += 2) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(centroids + 2 * k), p);
      const __m256d sq = _mm256_mul_pd(d, d);
      const __m256d h = _mm256_hadd_pd(sq, sq);  // [s0, s0, s1, s1]
      row[k] = _mm256_cvtsd_f64(h);
      row[k + 1] = _mm_cvtsd_f64(_mm256_extractf128_pd(h, 1));
    }
    for (; k < P; ++k) {
      const double a = z - centroids[2 * k];
      const double b = dz - centroids[2 * k + 1];
      row[k] = a * a + b * b;
    }
  }
}

void diag_gauss_logpdf_avx2(const double* obs, std::size_t T, std::size_t d, const double* mean,
                            const double* inv_var, double log_norm, double* out) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d ln = _mm256_set1_pd(log_norm);
  std::size_t t = 0;
  if (d == 1) {
    const __m256d m = _mm256_set1_pd(mean[0]);
    const __m256d iv = _mm256_set1_pd(inv_var[0]);
    for (; t + 4 <= T; t += 4) {
      const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(obs + t), m);
      const __m256d q = _mm256_mul_pd(_mm256_mul_pd(r, r), iv);
      _mm256_storeu_pd(out + t, _mm256_fnmadd_pd(half, q, ln));
    }
  } else if (d == 2) {
    const __m256d m = _mm256_setr_pd(mean[0], mean[1], mean[0], mean[1]);
    const __m256d iv = _mm256_setr_pd(inv_var[0], inv_var[1], inv_var[0], inv_var[1]);
    for (; t + 2 <= T; t += 2) {
      const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(obs + 2 * t), m);
      const __m256d sq = _mm256_mul_pd(_mm256_mul_pd(r, r), iv);
      const __m256d h = _mm256_hadd_pd(sq, sq);
      out[t] = log_norm - 0.5 * _mm256_cvtsd_f64(h);
      out[t + 1] = log_norm - 0.5 * _mm_cvtsd_f64(_mm256_extractf128_pd(h, 1));
    }
  }
  for (; t < T; ++t) {
    double q = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double r = obs[t * d + k] - mean[k];
      q += r * r * inv_var[k];
    }
    out[t] = log_norm - 0.5 * q;
  }
}

}  // namespace

const KernelSet& avx2_unchecked() {
  static const KernelSet set{
      "avx2", fcm_pair_sse_avx2, log_sum_exp_avx2, sq_dist_2d_avx2, diag_gauss_logpdf_avx2,
  };
  return set;
}

}  // namespace tsmb::kernels
