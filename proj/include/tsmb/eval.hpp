#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsmb/classify.hpp"
#include "tsmb/dataset.hpp"

namespace tsmb::eval {

/// Hyperparameter candidates for one scheme family.
struct HyperGrid {
  std::vector<classify::HyperParams> points;
};

/// n_states x covariance types. Defaults: 3..16 x {spherical, diagonal, full}.
HyperGrid hmm_grid(std::span<const std::size_t> sizes, std::span<const hmm::CovarianceType> covs);
/// Concept counts. Default: 3..16.
HyperGrid fcm_grid(std::span<const std::size_t> sizes);
std::vector<std::size_t> default_sizes();
HyperGrid default_grid(classify::Family family);

/// Strict ordering used to break accuracy ties: smaller model first, then
/// spherical < diagonal < full.
bool simpler(const classify::HyperParams& a, const classify::HyperParams& b);

struct EvalOptions {
  std::size_t folds = 3;
  /// Ignore failed per-series/per-class models instead of scoring the fold 0.
  bool lenient_failures = false;
  /// Worker threads across (grid point, fold) tasks; 0 = all cores.
  std::size_t jobs = 1;
};

struct GridResult {
  classify::HyperParams hyper;
  std::vector<double> fold_accuracy;
  std::vector<std::size_t> fold_failures;
  double mean_accuracy = 0.0;
};

struct CvResult {
  classify::HyperParams chosen;
  std::vector<GridResult> table;
  std::vector<classify::ModelRun> runs;
};

/// Stratified k-fold CV over the grid. The split uses mix_seed(seed, 0) and
/// fold f trains with mix_seed(seed, f + 1). A fold whose classifier recorded
/// a failure scores 0 unless lenient_failures is set (then only a classifier
/// with no usable model scores 0).
CvResult cross_validate(classify::SchemeId scheme, const std::vector<LabeledSeries>& train, const HyperGrid& grid,
                        const classify::SchemeOptions& options, const EvalOptions& eval_options, std::uint64_t seed);

/// Fraction of test series predicted correctly; series whose prediction
/// fails count as wrong. Throws DataError for an empty test set.
double evaluate_test(const classify::TrainedClassifier& classifier, const std::vector<LabeledSeries>& test);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> ranks(std::span<const double> v);

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Throws DataError for mismatched or short inputs or zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);

struct TimingRow {
  classify::SchemeId scheme;
  std::size_t size = 0;
  std::size_t count = 0;
  double mean_seconds = 0.0;
  double mean_iterations = 0.0;
};

/// Per (scheme, size) averages, ordered by scheme table order then size.
std::vector<TimingRow> timing_report(std::span<const classify::ModelRun> runs);
std::string timing_csv(std::span<const TimingRow> rows);

struct SchemeReport {
  classify::SchemeId scheme;
  CvResult cv;
  /// Test accuracy of each rerun (first entry = the seeded primary run).
  std::vector<double> test_accuracy;
  std::vector<std::size_t> test_failures;
  std::vector<classify::ModelRun> final_runs;

  double mean_test_accuracy() const;
};

struct DatasetReport {
  std::string dataset;
  std::size_t n_classes = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<SchemeReport> schemes;
};

/// Cross-validates, retrains on the full training set with the chosen
/// hyperparameters and scores the test set `reruns` times. Scheme s of the
/// table order uses mix_seed(seed, s + 1); rerun r trains with
/// mix_seed(scheme_seed, 1000 + r).
SchemeReport run_scheme(classify::SchemeId scheme, const Dataset& data, const HyperGrid& grid,
                        const classify::SchemeOptions& options, const EvalOptions& eval_options, std::uint64_t seed,
                        std::size_t reruns = 1);

/// Accuracy table in the layout of the four-scheme comparison: one row per
/// dataset with accuracy (%) and winning hyperparameters per scheme.
std::string accuracy_csv(std::span<const DatasetReport> reports);

}  // namespace tsmb::eval
