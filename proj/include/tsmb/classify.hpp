#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tsmb/dataset.hpp"
#include "tsmb/de.hpp"
#include "tsmb/fcm.hpp"
#include "tsmb/fuzzy.hpp"
#include "tsmb/hmm.hpp"

namespace tsmb::classify {

enum class Family { hmm, fcm };
enum class Granularity { per_class, per_series };

/// One of the four schemes: {HMM, FCM} x {one model per class, one model per
/// training series with a 1-nearest-neighbour decision}.
struct SchemeId {
  Family family = Family::hmm;
  Granularity granularity = Granularity::per_class;

  friend bool operator==(const SchemeId&, const SchemeId&) = default;
};

/// "hmm-1c", "hmm-nn", "fcm-1c", "fcm-nn".
std::string to_string(SchemeId s);
/// Also accepts the display forms "HMM 1C", "HMM_NN", ... case-insensitively.
SchemeId parse_scheme(const std::string& s);
/// Table order: HMM 1C, HMM NN, FCM 1C, FCM NN.
std::vector<SchemeId> all_schemes();

/// Model size: hidden states for HMMs, concepts for FCMs. `cov` is ignored
/// for FCMs.
struct HyperParams {
  std::size_t size = 3;
  hmm::CovarianceType cov = hmm::CovarianceType::diagonal;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// "3 full" for HMMs, "7" for FCMs.
std::string describe(Family family, const HyperParams& h);

struct EmSettings {
  std::size_t max_iter = 50;
  double tol = 1e-3;
  std::size_t restarts = 10;
};

struct SchemeOptions {
  double tau = 5.0;
  double fuzzy_m = 2.0;
  bool hmm_delta = false;
  /// One centroid set fit on all training points and used by every FCM
  /// model; when false each model clusters only its own points.
  bool shared_centroids = true;
  de::DeParams de;
  EmSettings em;
  fuzzy::ClusterParams cluster;
  /// Worker threads for training bank entries (0 = all cores).
  std::size_t jobs = 1;
};

using Model = std::variant<hmm::GaussianHmm, fcm::FcmModel>;

/// A trained model and who it represents. In 1C banks `owner_index` is the
/// class's position in TrainedClassifier::classes; in NN banks it is the
/// training series index.
struct BankEntry {
  std::string owner_label;
  std::size_t owner_index = 0;
  Model model;
};

struct FitFailure {
  std::string owner_label;
  std::size_t owner_index = 0;
  std::string reason;
};

/// Wall-clock and optimizer iteration count of one model training.
struct ModelRun {
  SchemeId scheme;
  std::size_t size = 0;
  double seconds = 0.0;
  std::size_t iterations = 0;
};

struct TrainedClassifier {
  SchemeId scheme;
  HyperParams hyper;
  SchemeOptions options;
  std::vector<std::string> classes;
  std::vector<BankEntry> bank;
  std::vector<FitFailure> failures;
  std::vector<ModelRun> runs;

  /// No training failure was recorded.
  bool complete() const noexcept { return failures.empty(); }
  /// At least one model can score.
  bool usable() const noexcept { return !bank.empty(); }
};

/// Trains one model per class (1C) or per training series (NN). Model k is
/// seeded with mix_seed(seed, k). Per-model failures are recorded, not thrown.
TrainedClassifier train_classifier(SchemeId scheme, const std::vector<LabeledSeries>& train,
                                   const HyperParams& hyper, const SchemeOptions& options, std::uint64_t seed);

/// HMM: forward log-likelihood (higher is better). FCM: one-step MSE of the
/// series fuzzified with the model's own centroids (lower is better).
/// Scoring errors yield the family's worst value (-inf or +inf).
double score(const Model& model, const LabeledSeries& series, const SchemeOptions& options);

/// Whether `a` is a strictly better score than `b` for this family.
bool better(Family family, double a, double b);

struct Candidate {
  double score;
  std::string label;
  std::size_t owner_index;
};

/// Index of the winning candidate: best score in the family's direction,
/// ties broken by smallest label, then smallest owner index. Throws
/// DataError when there are no candidates or none has a finite score.
std::size_t decide(Family family, std::span<const Candidate> candidates);

/// Label of the best-scoring bank entry. Throws DataError when the bank is
/// empty or nothing scores.
std::string predict(const TrainedClassifier& classifier, const LabeledSeries& series);

}  // namespace tsmb::classify
