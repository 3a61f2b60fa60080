#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsmb/de.hpp"
#include "tsmb/fuzzy.hpp"

namespace tsmb::fcm {

/// Fuzzy Cognitive Map over P concepts.
///
/// `weights` is P x P row-major; weights[j * P + i] is the edge from concept
/// j to concept i, so the next activation of concept i is
///   sigmoid(sum_j weights[j * P + i] * x_j, tau).
struct FcmModel {
  std::size_t P = 0;
  std::vector<double> weights;
  double tau = 5.0;
  fuzzy::CentroidSet centroids;

  double weight(std::size_t from, std::size_t to) const { return weights[from * P + to]; }
};

/// Throws DataError unless |w| <= 1, tau > 0 and the weight matrix is P x P.
/// The centroid set is checked for size only when non-empty.
void validate(const FcmModel& model);

/// 1 / (1 + exp(-tau * x)).
double sigmoid(double x, double tau);

/// One reasoning step. Throws DataError on dimension mismatch.
std::vector<double> fcm_step(std::span<const double> activation, const FcmModel& model);

/// Mean squared one-step prediction error over every consecutive row pair of
/// every sequence: SSE / (pairs * P). Throws DataError naming the first
/// sequence with fewer than 2 rows or a mismatched width.
double fcm_prediction_error(const FcmModel& model, std::span<const fuzzy::ActivationSequence> seqs);

/// Same as above for a raw weight vector (used as the DE objective).
double prediction_error(std::span<const double> weights, std::size_t P, double tau,
                        std::span<const fuzzy::ActivationSequence> seqs);

struct TrainResult {
  FcmModel model;
  double mse = 0.0;
  std::size_t iterations = 0;
};

/// Fits the weight matrix by Differential Evolution over [-1, 1]^(P*P)
/// minimizing fcm_prediction_error. The all-zero matrix is injected into the
/// initial population. The returned model carries `centroids` unchanged.
TrainResult train_fcm(std::span<const fuzzy::ActivationSequence> seqs, std::size_t P, double tau,
                      const de::DeParams& de_params, std::uint64_t seed, fuzzy::CentroidSet centroids = {});

}  // namespace tsmb::fcm
