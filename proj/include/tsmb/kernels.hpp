#pragma once

// Numeric inner loops shared by the fuzzy, fcm and hmm modules.
//
// Every kernel has a scalar reference implementation. Wider variants
// (currently AVX2+FMA on x86-64) are compiled into separate translation
// units with their own target flags and are picked once at startup based on
// what the CPU reports. Set TSMB_SIMD=scalar in the environment to force the
// reference path.

#include <cstddef>
#include <string_view>

namespace tsmb::kernels {

struct KernelSet {
  std::string_view name;

  /// Sum over t in [0, n_rows-1) and i in [0, P) of
  ///   (sigmoid(tau * sum_j w[j*P + i] * rows[t*P + j]) - rows[(t+1)*P + i])^2
  /// `weights` is P x P row-major with row = source concept, column = target.
  double (*fcm_pair_sse)(const double* weights, const double* rows, std::size_t n_rows,
                         std::size_t P, double tau);

  /// log(sum_i exp(x[i])); -inf for n == 0 or all entries -inf.
  double (*log_sum_exp)(const double* x, std::size_t n);

  /// out[t*P + k] = ||points[t] - centroids[k]||^2 for 2-D points stored as
  /// interleaved (z, dz) pairs.
  void (*sq_dist_2d)(const double* points, std::size_t n_points, const double* centroids,
                     std::size_t P, double* out);

  /// Diagonal Gaussian log density for T observations of dimension d:
  ///   out[t] = log_norm - 0.5 * sum_k (obs[t*d+k] - mean[k])^2 * inv_var[k]
  void (*diag_gauss_logpdf)(const double* obs, std::size_t T, std::size_t d, const double* mean,
                            const double* inv_var, double log_norm, double* out);
};

/// Reference implementation; always available.
const KernelSet& scalar();

/// AVX2+FMA implementation, or nullptr if not compiled in or not supported
/// by the running CPU.
const KernelSet* avx2();

/// The kernel set used by the library. Chosen once: TSMB_SIMD=scalar forces
/// the reference path, otherwise the widest supported variant.
const KernelSet& active();

}  // namespace tsmb::kernels
