#include "tsmb/fcm.hpp"

#include <cmath>
#include <string>

#include "tsmb/error.hpp"
#include "tsmb/kernels.hpp"

namespace tsmb::fcm {

void validate(const FcmModel& model) {
  if (model.P == 0) throw DataError("FCM needs at least one concept");
  if (model.weights.size() != model.P * model.P) throw DataError("FCM weight matrix is not P x P");
  if (!(model.tau > 0.0)) throw DataError("FCM tau must be positive");
  for (double w : model.weights)
    if (!(std::abs(w) <= 1.0)) throw DataError("FCM weight outside [-1, 1]");
  if (model.centroids.size() != 0 && model.centroids.size() != model.P)
    throw DataError("FCM centroid count differs from concept count");
}

double sigmoid(double x, double tau) { return 1.0 / (1.0 + std::exp(-tau * x)); }

std::vector<double> fcm_step(std::span<const double> activation, const FcmModel& model) {
  const std::size_t P = model.P;
  if (activation.size() != P || model.weights.size() != P * P)
    throw DataError("fcm_step: activation has " + std::to_string(activation.size()) + " entries for " +
                    std::to_string(P) + " concepts");
  std::vector<double> out(P, 0.0);
  for (std::size_t j = 0; j < P; ++j)
    for (std::size_t i = 0; i < P; ++i) out[i] += model.weights[j * P + i] * activation[j];
  for (double& v : out) v = sigmoid(v, model.tau);
  return out;
}

double prediction_error(std::span<const double> weights, std::size_t P, double tau,
                        std::span<const fuzzy::ActivationSequence> seqs) {
  if (weights.size() != P * P) throw DataError("weight vector is not P x P");
  const auto& kern = kernels::active();
  double sse = 0.0;
  std::size_t pairs = 0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto& seq = seqs[s];
    if (seq.P != P) throw DataError("activation sequence " + std::to_string(s) + " has the wrong width");
    if (seq.rows() < 2) throw DataError("activation sequence " + std::to_string(s) + " has fewer than 2 rows");
    sse += kern.fcm_pair_sse(weights.data(), seq.data.data(), seq.rows(), P, tau);
    pairs += seq.rows() - 1;
  }
  if (pairs == 0) throw DataError("no consecutive activation pairs");
  return sse / static_cast<double>(pairs * P);
}

double fcm_prediction_error(const FcmModel& model, std::span<const fuzzy::ActivationSequence> seqs) {
  return prediction_error(model.weights, model.P, model.tau, seqs);
}

TrainResult train_fcm(std::span<const fuzzy::ActivationSequence> seqs, std::size_t P, double tau,
                      const de::DeParams& de_params, std::uint64_t seed, fuzzy::CentroidSet centroids) {
  if (seqs.empty()) throw DataError("train_fcm: no activation sequences");
  if (!(tau > 0.0)) throw DataError("train_fcm: tau must be positive");
  // Surface shape problems before the optimizer starts.
  const std::vector<double> zero(P * P, 0.0);
  prediction_error(zero, P, tau, seqs);

  const std::vector<de::Bounds> bounds(P * P, de::Bounds{-1.0, 1.0});
  const std::vector<std::vector<double>> seeded{zero};
  auto objective = [&](std::span<const double> w) { return prediction_error(w, P, tau, seqs); };
  const auto res = de::de_optimize(objective, bounds, de_params, seed, seeded);

  TrainResult out;
  out.model.P = P;
  out.model.weights = res.best;
  out.model.tau = tau;
  out.model.centroids = std::move(centroids);
  out.mse = res.best_value;
  out.iterations = res.iterations;
  return out;
}

}  // namespace tsmb::fcm
