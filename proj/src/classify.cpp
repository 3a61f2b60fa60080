#include "tsmb/classify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "tsmb/error.hpp"
#include "tsmb/parallel.hpp"
#include "tsmb/rng.hpp"

namespace tsmb::classify {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Owner {
  std::string label;
  std::size_t index;
  std::vector<const LabeledSeries*> series;
};

struct Slot {
  std::optional<Model> model;
  std::string failure;
  double seconds = 0.0;
  std::size_t iterations = 0;
};

std::vector<fuzzy::DeltaPoint> pooled_points(std::span<const LabeledSeries* const> series) {
  std::vector<fuzzy::DeltaPoint> pts;
  for (const auto* s : series) {
    const auto e = fuzzy::embed_deltas(*s);
    pts.insert(pts.end(), e.begin(), e.end());
  }
  return pts;
}

Slot train_hmm(const Owner& owner, const HyperParams& hyper, const SchemeOptions& opt, std::uint64_t seed) {
  Slot slot;
  std::vector<hmm::Observations> obs;
  obs.reserve(owner.series.size());
  for (const auto* s : owner.series) obs.push_back(hmm::to_observations(s->values, opt.hmm_delta));
  auto outcome = hmm::fit_hmm_restarts(obs, hyper.size, hyper.cov, opt.em.restarts, opt.em.max_iter, opt.em.tol, seed);
  slot.iterations = outcome.iterations;
  if (outcome.failed)
    slot.failure = outcome.reason;
  else
    slot.model = std::move(*outcome.model);
  return slot;
}

Slot train_fcm(const Owner& owner, const HyperParams& hyper, const SchemeOptions& opt, std::uint64_t seed,
               const fuzzy::CentroidSet* shared) {
  Slot slot;
  try {
    fuzzy::CentroidSet centroids;
    if (shared != nullptr) {
      centroids = *shared;
    } else {
      const auto pts = pooled_points(owner.series);
      centroids = fuzzy::fcm_cluster(pts, hyper.size, opt.fuzzy_m, opt.cluster, mix_seed(seed, 1)).centroids;
    }
    std::vector<fuzzy::ActivationSequence> seqs;
    seqs.reserve(owner.series.size());
    for (const auto* s : owner.series) seqs.push_back(fuzzy::fuzzify_series(*s, centroids));
    auto res = fcm::train_fcm(seqs, hyper.size, opt.tau, opt.de, mix_seed(seed, 2), std::move(centroids));
    slot.iterations = res.iterations;
    slot.model = std::move(res.model);
  } catch (const DataError& e) {
    slot.failure = e.what();
  }
  return slot;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string to_string(SchemeId s) {
  const char* fam = s.family == Family::hmm ? "hmm" : "fcm";
  const char* gran = s.granularity == Granularity::per_class ? "1c" : "nn";
  return std::string(fam) + "-" + gran;
}

SchemeId parse_scheme(const std::string& s) {
  std::string key = lower(s);
  std::replace(key.begin(), key.end(), '_', '-');
  std::replace(key.begin(), key.end(), ' ', '-');
  for (auto id : all_schemes())
    if (to_string(id) == key) return id;
  throw UsageError("unknown scheme '" + s + "' (expected hmm-1c, hmm-nn, fcm-1c or fcm-nn)");
}

std::vector<SchemeId> all_schemes() {
  return {{Family::hmm, Granularity::per_class},
          {Family::hmm, Granularity::per_series},
          {Family::fcm, Granularity::per_class},
          {Family::fcm, Granularity::per_series}};
}

std::string describe(Family family, const HyperParams& h) {
  if (family == Family::fcm) return std::to_string(h.size);
  return std::to_string(h.size) + " " + hmm::to_string(h.cov);
}

TrainedClassifier train_classifier(SchemeId scheme, const std::vector<LabeledSeries>& train, const HyperParams& hyper,
                                   const SchemeOptions& options, std::uint64_t seed) {
  if (train.empty()) throw DataError("train_classifier: empty training set");
  if (hyper.size == 0) throw UsageError("model size must be positive");
  if (scheme.family == Family::fcm && hyper.size < 2) throw UsageError("FCM needs at least 2 concepts");

  TrainedClassifier out;
  out.scheme = scheme;
  out.hyper = hyper;
  out.options = options;
  out.classes = distinct_labels(train);

  std::vector<Owner> owners;
  if (scheme.granularity == Granularity::per_class) {
    for (std::size_t c = 0; c < out.classes.size(); ++c) {
      Owner o{out.classes[c], c, {}};
      for (const auto& s : train)
        if (s.label == o.label) o.series.push_back(&s);
      owners.push_back(std::move(o));
    }
  } else {
    for (std::size_t i = 0; i < train.size(); ++i) owners.push_back({train[i].label, i, {&train[i]}});
  }

  std::optional<fuzzy::CentroidSet> shared;
  std::string shared_failure;
  if (scheme.family == Family::fcm && options.shared_centroids) {
    std::vector<const LabeledSeries*> all;
    for (const auto& s : train) all.push_back(&s);
    try {
      shared = fuzzy::fcm_cluster(pooled_points(all), hyper.size, options.fuzzy_m, options.cluster, mix_seed(seed, 0xC1))
                   .centroids;
    } catch (const DataError& e) {
      shared_failure = e.what();
    }
  }

  std::vector<Slot> slots(owners.size());
  parallel_for(owners.size(), options.jobs, [&](std::size_t k) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t model_seed = mix_seed(seed, owners[k].index);
    if (scheme.family == Family::hmm) {
      slots[k] = train_hmm(owners[k], hyper, options, model_seed);
    } else if (!shared_failure.empty()) {
      slots[k].failure = "shared centroids: " + shared_failure;
    } else {
      slots[k] = train_fcm(owners[k], hyper, options, model_seed, shared ? &*shared : nullptr);
    }
    slots[k].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  });

  for (std::size_t k = 0; k < owners.size(); ++k) {
    out.runs.push_back({scheme, hyper.size, slots[k].seconds, slots[k].iterations});
    if (slots[k].model)
      out.bank.push_back({owners[k].label, owners[k].index, std::move(*slots[k].model)});
    else
      out.failures.push_back({owners[k].label, owners[k].index, slots[k].failure});
  }
  return out;
}

double score(const Model& model, const LabeledSeries& series, const SchemeOptions& options) {
  if (const auto* h = std::get_if<hmm::GaussianHmm>(&model)) {
    try {
      const double ll = hmm::forward_log_likelihood(*h, hmm::to_observations(series.values, options.hmm_delta));
      return std::isnan(ll) ? -kInf : ll;
    } catch (const Error&) {
      return -kInf;
    }
  }
  const auto& f = std::get<fcm::FcmModel>(model);
  try {
    const auto seq = fuzzy::fuzzify_series(series, f.centroids);
    const double mse = fcm::fcm_prediction_error(f, std::span(&seq, 1));
    return std::isnan(mse) ? kInf : mse;
  } catch (const Error&) {
    return kInf;
  }
}

bool better(Family family, double a, double b) { return family == Family::hmm ? a > b : a < b; }

std::size_t decide(Family family, std::span<const Candidate> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!std::isfinite(c.score)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (better(family, c.score, b.score) ||
        (c.score == b.score && (c.label < b.label || (c.label == b.label && c.owner_index < b.owner_index))))
      best = i;
  }
  if (!best) throw DataError("no model produced a finite score");
  return *best;
}

std::string predict(const TrainedClassifier& classifier, const LabeledSeries& series) {
  if (!classifier.usable()) throw DataError("classifier has no usable model");
  std::vector<Candidate> candidates;
  candidates.reserve(classifier.bank.size());
  for (const auto& e : classifier.bank)
    candidates.push_back({score(e.model, series, classifier.options), e.owner_label, e.owner_index});
  return candidates[decide(classifier.scheme.family, candidates)].label;
}

}  // namespace tsmb::classify
