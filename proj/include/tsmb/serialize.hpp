#pragma once

#include <json.hpp>

#include "tsmb/classify.hpp"
#include "tsmb/eval.hpp"
#include "tsmb/fcm.hpp"
#include "tsmb/fuzzy.hpp"
#include "tsmb/hmm.hpp"

// JSON forms of models, classifier bundles and benchmark reports.
// Readers throw ParseError on missing or mistyped fields.

namespace tsmb::serialize {

using Json = nlohmann::ordered_json;

inline constexpr int kBundleVersion = 1;

Json to_json(const fuzzy::CentroidSet& cs);
fuzzy::CentroidSet centroids_from_json(const Json& j);

/// {"P", "tau", "weights" (row-major, row = source concept), "centroids", "M"}.
Json to_json(const fcm::FcmModel& m);
fcm::FcmModel fcm_from_json(const Json& j);

/// {"n_states", "dim", "cov_type", "pi", "A" (row-major), "means", "covariances"}.
/// Covariances are one number per state (spherical), one vector per state
/// (diagonal) or one row-major d x d matrix per state (full).
Json to_json(const hmm::GaussianHmm& m);
hmm::GaussianHmm hmm_from_json(const Json& j);

Json to_json(const classify::SchemeOptions& o);
classify::SchemeOptions options_from_json(const Json& j);

/// {"format_version", "scheme", "hyperparams", "options", "classes", "bank", "failures"}.
/// Timings are not stored.
Json to_json(const classify::TrainedClassifier& c);
classify::TrainedClassifier classifier_from_json(const Json& j);

/// Deterministic report: no wall-clock values.
Json to_json(const eval::SchemeReport& r);
Json to_json(const eval::DatasetReport& r);
Json report_json(std::span<const eval::DatasetReport> reports, const Json& config);

}  // namespace tsmb::serialize
