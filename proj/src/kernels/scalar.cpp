#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tsmb/kernels.hpp"

namespace tsmb::kernels {
namespace {

double fcm_pair_sse_scalar(const double* weights, const double* rows, std::size_t n_rows,
                           std::size_t P, double tau) {
  if (n_rows < 2) return 0.0;
  std::vector<double> acc(P);
  double sse = 0.0;
  for (std::size_t t = 0; t + 1 < n_rows; ++t) {
    const double* x = rows + t * P;
    const double* target = rows + (t + 1) * P;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < P; ++j) {
      const double xj = x[j];
      const double* wrow = weights + j * P;
      for (std::size_t i = 0; i < P; ++i) acc[i] += wrow[i] * xj;
    }
    for (std::size_t i = 0; i < P; ++i) {
      const double y = 1.0 / (1.0 + std::exp(-tau * acc[i]));
      const double diff = y - target[i];
      sse += diff * diff;
    }
  }
  return sse;
}

double log_sum_exp_scalar(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x, x + n);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

void sq_dist_2d_scalar(const double* points, std::size_t n_points, const double* centroids,
                       std::size_t P, double* out) {
  for (std::size_t t = 0; t < n_points; ++t) {
    const double z = points[2 * t];
    const double dz = points[2 * t + 1];
    for (std::size_t k = 0; k < P; ++k) {
      const double a = z - centroids[2 * k];
      const double b = dz - centroids[2 * k + 1];
      out[t * P + k] = a * a + b * b;
    }
  }
}

void diag_gauss_logpdf_scalar(const double* obs, std::size_t T, std::size_t d, const double* mean,
                              const double* inv_var, double log_norm, double* out) {
  for (std::size_t t = 0; t < T; ++t) {
    double q = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double r = obs[t * d + k] - mean[k];
      q += r * r * inv_var[k];
    }
    out[t] = log_norm - 0.5 * q;
  }
}

}  // namespace

const KernelSet& scalar() {
  static const KernelSet set{
      "scalar", fcm_pair_sse_scalar, log_sum_exp_scalar, sq_dist_2d_scalar,
      diag_gauss_logpdf_scalar,
  };
  return set;
}

}  // namespace tsmb::kernels
