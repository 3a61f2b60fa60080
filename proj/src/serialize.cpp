#include "tsmb/serialize.hpp"

#include "tsmb/error.hpp"

namespace tsmb::serialize {
namespace {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what(), 0);
  }
}

Json hyper_json(classify::Family family, const classify::HyperParams& h) {
  Json j;
  j["size"] = h.size;
  if (family == classify::Family::hmm) j["cov_type"] = hmm::to_string(h.cov);
  j["label"] = classify::describe(family, h);
  return j;
}

classify::HyperParams hyper_from_json(const Json& j) {
  classify::HyperParams h;
  h.size = j.at("size").get<std::size_t>();
  if (j.contains("cov_type")) h.cov = hmm::parse_covariance_type(j.at("cov_type").get<std::string>());
  return h;
}

}  // namespace

Json to_json(const fuzzy::CentroidSet& cs) {
  Json pts = Json::array();
  for (const auto& c : cs.centroids) pts.push_back({c.z, c.dz});
  return Json{{"M", cs.m}, {"centroids", pts}};
}

fuzzy::CentroidSet centroids_from_json(const Json& j) {
  return guarded("centroid set", [&] {
    fuzzy::CentroidSet cs;
    cs.m = j.at("M").get<double>();
    for (const auto& p : j.at("centroids")) cs.centroids.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return cs;
  });
}

Json to_json(const fcm::FcmModel& m) {
  return Json{{"P", m.P},
              {"tau", m.tau},
              {"weights", m.weights},
              {"centroids", to_json(m.centroids)["centroids"]},
              {"M", m.centroids.m}};
}

fcm::FcmModel fcm_from_json(const Json& j) {
  auto m = guarded("FCM model", [&] {
    fcm::FcmModel m;
    m.P = j.at("P").get<std::size_t>();
    m.tau = j.at("tau").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.centroids = centroids_from_json(Json{{"M", j.at("M")}, {"centroids", j.at("centroids")}});
    return m;
  });
  try {
    fcm::validate(m);
  } catch (const DataError& e) {
    throw ParseError(std::string("FCM model: ") + e.what(), 0);
  }
  return m;
}

Json to_json(const hmm::GaussianHmm& m) {
  const auto d = static_cast<Eigen::Index>(m.dim);
  const auto K = static_cast<Eigen::Index>(m.n_states);
  Json pi = Json::array(), a = Json::array(), means = Json::array(), covs = Json::array();
  for (Eigen::Index i = 0; i < K; ++i) pi.push_back(m.start(i));
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) a.push_back(m.transitions(i, j));
  for (const auto& mu : m.means) means.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
  for (const auto& c : m.covariances) {
    switch (m.cov_type) {
      case hmm::CovarianceType::spherical: covs.push_back(c(0, 0)); break;
      case hmm::CovarianceType::diagonal: {
        Json diag = Json::array();
        for (Eigen::Index k = 0; k < d; ++k) diag.push_back(c(k, k));
        covs.push_back(diag);
        break;
      }
      case hmm::CovarianceType::full: {
        Json full = Json::array();
        for (Eigen::Index r = 0; r < d; ++r)
          for (Eigen::Index k = 0; k < d; ++k) full.push_back(c(r, k));
        covs.push_back(full);
        break;
      }
    }
  }
  return Json{{"n_states", m.n_states}, {"dim", m.dim},    {"cov_type", hmm::to_string(m.cov_type)},
              {"pi", pi},               {"A", a},          {"means", means},
              {"covariances", covs}};
}

hmm::GaussianHmm hmm_from_json(const Json& j) {
  auto m = guarded("HMM model", [&] {
    hmm::GaussianHmm m;
    m.n_states = j.at("n_states").get<std::size_t>();
    m.dim = j.at("dim").get<std::size_t>();
    m.cov_type = hmm::parse_covariance_type(j.at("cov_type").get<std::string>());
    const auto K = static_cast<Eigen::Index>(m.n_states);
    const auto d = static_cast<Eigen::Index>(m.dim);
    const auto pi = j.at("pi").get<std::vector<double>>();
    const auto a = j.at("A").get<std::vector<double>>();
    if (pi.size() != m.n_states || a.size() != m.n_states * m.n_states)
      throw ParseError("HMM model: pi/A sizes disagree with n_states", 0);
    m.start = Eigen::Map<const Eigen::VectorXd>(pi.data(), K);
    m.transitions = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data(), K, K);
    for (const auto& mu : j.at("means")) {
      const auto v = mu.get<std::vector<double>>();
      m.means.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    for (const auto& c : j.at("covariances")) {
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      switch (m.cov_type) {
        case hmm::CovarianceType::spherical: cov.diagonal().setConstant(c.get<double>()); break;
        case hmm::CovarianceType::diagonal: {
          const auto v = c.get<std::vector<double>>();
          if (v.size() != m.dim) throw ParseError("HMM model: diagonal covariance has the wrong length", 0);
          for (Eigen::Index k = 0; k < d; ++k) cov(k, k) = v[static_cast<std::size_t>(k)];
          break;
        }
        case hmm::CovarianceType::full: {
          const auto v = c.get<std::vector<double>>();
          if (v.size() != m.dim * m.dim) throw ParseError("HMM model: full covariance has the wrong size", 0);
          cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), d, d);
          break;
        }
      }
      m.covariances.push_back(cov);
    }
    return m;
  });
  try {
    hmm::validate(m);
  } catch (const DataError& e) {
    throw ParseError(std::string("HMM model: ") + e.what(), 0);
  }
  return m;
}

Json to_json(const classify::SchemeOptions& o) {
  return Json{{"tau", o.tau},
              {"fuzzy_m", o.fuzzy_m},
              {"hmm_delta", o.hmm_delta},
              {"shared_centroids", o.shared_centroids},
              {"de",
               {{"max_iter", o.de.max_iter},
                {"mutation", o.de.mutation},
                {"recombination", o.de.recombination},
                {"popsize_factor", o.de.popsize_factor},
                {"tol", o.de.tol}}},
              {"em", {{"max_iter", o.em.max_iter}, {"tol", o.em.tol}, {"restarts", o.em.restarts}}},
              {"cluster", {{"tol", o.cluster.tol}, {"max_iter", o.cluster.max_iter}}}};
}

classify::SchemeOptions options_from_json(const Json& j) {
  return guarded("scheme options", [&] {
    classify::SchemeOptions o;
    o.tau = j.at("tau").get<double>();
    o.fuzzy_m = j.at("fuzzy_m").get<double>();
    o.hmm_delta = j.at("hmm_delta").get<bool>();
    o.shared_centroids = j.at("shared_centroids").get<bool>();
    const auto& de = j.at("de");
    o.de.max_iter = de.at("max_iter").get<std::size_t>();
    o.de.mutation = de.at("mutation").get<double>();
    o.de.recombination = de.at("recombination").get<double>();
    o.de.popsize_factor = de.at("popsize_factor").get<std::size_t>();
    o.de.tol = de.at("tol").get<double>();
    const auto& em = j.at("em");
    o.em.max_iter = em.at("max_iter").get<std::size_t>();
    o.em.tol = em.at("tol").get<double>();
    o.em.restarts = em.at("restarts").get<std::size_t>();
    const auto& cl = j.at("cluster");
    o.cluster.tol = cl.at("tol").get<double>();
    o.cluster.max_iter = cl.at("max_iter").get<std::size_t>();
    return o;
  });
}

Json to_json(const classify::TrainedClassifier& c) {
  Json bank = Json::array();
  for (const auto& e : c.bank) {
    Json model = std::visit([](const auto& m) { return to_json(m); }, e.model);
    bank.push_back({{"owner_label", e.owner_label}, {"owner_index", e.owner_index}, {"model", model}});
  }
  Json failures = Json::array();
  for (const auto& f : c.failures)
    failures.push_back({{"owner_label", f.owner_label}, {"owner_index", f.owner_index}, {"reason", f.reason}});
  return Json{{"format_version", kBundleVersion},
              {"scheme", classify::to_string(c.scheme)},
              {"hyperparams", hyper_json(c.scheme.family, c.hyper)},
              {"options", to_json(c.options)},
              {"classes", c.classes},
              {"bank", bank},
              {"failures", failures}};
}

classify::TrainedClassifier classifier_from_json(const Json& j) {
  return guarded("classifier bundle", [&] {
    if (j.at("format_version").get<int>() != kBundleVersion)
      throw ParseError("classifier bundle: unsupported format_version", 0);
    classify::TrainedClassifier c;
    c.scheme = classify::parse_scheme(j.at("scheme").get<std::string>());
    c.hyper = hyper_from_json(j.at("hyperparams"));
    c.options = options_from_json(j.at("options"));
    c.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& e : j.at("bank")) {
      classify::BankEntry entry;
      entry.owner_label = e.at("owner_label").get<std::string>();
      entry.owner_index = e.at("owner_index").get<std::size_t>();
      if (c.scheme.family == classify::Family::hmm)
        entry.model = hmm_from_json(e.at("model"));
      else
        entry.model = fcm_from_json(e.at("model"));
      c.bank.push_back(std::move(entry));
    }
    for (const auto& f : j.at("failures"))
      c.failures.push_back({f.at("owner_label").get<std::string>(), f.at("owner_index").get<std::size_t>(),
                            f.at("reason").get<std::string>()});
    return c;
  });
}

Json to_json(const eval::SchemeReport& r) {
  Json cv = Json::array();
  for (const auto& row : r.cv.table)
    cv.push_back({{"hyperparams", hyper_json(r.scheme.family, row.hyper)},
                  {"fold_accuracy", row.fold_accuracy},
                  {"fold_failures", row.fold_failures},
                  {"mean_accuracy", row.mean_accuracy}});
  double iterations = 0.0;
  for (const auto& run : r.final_runs) iterations += static_cast<double>(run.iterations);
  if (!r.final_runs.empty()) iterations /= static_cast<double>(r.final_runs.size());
  double lo = 0.0, hi = 0.0;
  if (!r.test_accuracy.empty()) {
    lo = *std::min_element(r.test_accuracy.begin(), r.test_accuracy.end());
    hi = *std::max_element(r.test_accuracy.begin(), r.test_accuracy.end());
  }
  return Json{{"scheme", classify::to_string(r.scheme)},
              {"chosen", hyper_json(r.scheme.family, r.cv.chosen)},
              {"test_accuracy", r.mean_test_accuracy()},
              {"test_accuracy_runs", r.test_accuracy},
              {"test_accuracy_min", lo},
              {"test_accuracy_max", hi},
              {"test_failures", r.test_failures},
              {"mean_final_iterations", iterations},
              {"cv", cv}};
}

Json to_json(const eval::DatasetReport& r) {
  Json schemes = Json::array();
  for (const auto& s : r.schemes) schemes.push_back(to_json(s));
  return Json{{"dataset", r.dataset},
              {"n_classes", r.n_classes},
              {"n_train", r.n_train},
              {"n_test", r.n_test},
              {"schemes", schemes}};
}

Json report_json(std::span<const eval::DatasetReport> reports, const Json& config) {
  Json datasets = Json::array();
  for (const auto& r : reports) datasets.push_back(to_json(r));
  return Json{{"format_version", kBundleVersion}, {"config", config}, {"datasets", datasets}};
}

}  // namespace tsmb::serialize
