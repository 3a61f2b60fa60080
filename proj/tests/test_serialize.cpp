#include <doctest.h>

#include "synthetic.hpp"
#include "tsmb/error.hpp"
#include "tsmb/serialize.hpp"

using namespace tsmb;
using namespace tsmb::serialize;

TEST_CASE("hmm round trip for every covariance type") {
  Rng rng(1);
  for (auto type : {hmm::CovarianceType::spherical, hmm::CovarianceType::diagonal, hmm::CovarianceType::full}) {
    auto m = testing::random_hmm(3, 2, type, rng);
    auto back = hmm_from_json(Json::parse(to_json(m).dump()));
    CHECK(back.cov_type == type);
    CHECK(back.transitions.isApprox(m.transitions, 1e-15));
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(back.means[k].isApprox(m.means[k], 1e-15));
      CHECK(back.covariances[k].isApprox(m.covariances[k], 1e-15));
    }
  }
}

TEST_CASE("fcm round trip") {
  fcm::FcmModel m{2, {0.1, -0.25, 1.0, 0}, 4.5, {{{0, 1}, {2, -1}}, 1.5}};
  auto back = fcm_from_json(Json::parse(to_json(m).dump()));
  CHECK(back.weights == m.weights);
  CHECK(back.tau == m.tau);
  CHECK(back.centroids.m == 1.5);
  CHECK(back.centroids.centroids == m.centroids.centroids);
}

TEST_CASE("classifier bundle round trip keeps predictions") {
  auto train = testing::sine_vs_ar(3, 40, 2);
  classify::SchemeOptions o;
  o.de.max_iter = 10;
  o.em.restarts = 1;
  for (auto scheme : classify::all_schemes()) {
    auto c = classify::train_classifier(scheme, train, {3, hmm::CovarianceType::diagonal}, o, 3);
    auto j = to_json(c);
    CHECK(j["format_version"] == kBundleVersion);
    auto back = classifier_from_json(Json::parse(j.dump()));
    CHECK(back.scheme == c.scheme);
    CHECK(back.bank.size() == c.bank.size());
    for (const auto& s : train) CHECK(classify::predict(back, s) == classify::predict(c, s));
  }
}

TEST_CASE("malformed bundles raise parse errors") {
  CHECK_THROWS_AS(classifier_from_json(Json::parse("{}")), ParseError);
  CHECK_THROWS_AS(fcm_from_json(Json::parse(R"({"P": 2, "tau": 5, "weights": [0, 0, 0]})")), Error);
  CHECK_THROWS_AS(hmm_from_json(Json::parse(R"({"n_states": "x"})")), ParseError);
}
