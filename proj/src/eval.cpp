#include "tsmb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "tsmb/error.hpp"
#include "tsmb/parallel.hpp"
#include "tsmb/rng.hpp"

namespace tsmb::eval {
namespace {

using classify::Family;
using classify::HyperParams;
using classify::SchemeId;

std::size_t scheme_rank(SchemeId s) {
  const auto all = classify::all_schemes();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), s) - all.begin());
}

int cov_rank(hmm::CovarianceType t) {
  switch (t) {
    case hmm::CovarianceType::spherical: return 0;
    case hmm::CovarianceType::diagonal: return 1;
    case hmm::CovarianceType::full: return 2;
  }
  return 3;
}

double fold_accuracy(const classify::TrainedClassifier& clf, const std::vector<LabeledSeries>& validation,
                     bool lenient) {
  if (!lenient && !clf.complete()) return 0.0;
  if (!clf.usable()) return 0.0;
  return evaluate_test(clf, validation);
}

}  // namespace

HyperGrid hmm_grid(std::span<const std::size_t> sizes, std::span<const hmm::CovarianceType> covs) {
  HyperGrid g;
  for (std::size_t n : sizes)
    for (auto c : covs) g.points.push_back({n, c});
  return g;
}

HyperGrid fcm_grid(std::span<const std::size_t> sizes) {
  HyperGrid g;
  for (std::size_t n : sizes) g.points.push_back({n, hmm::CovarianceType::diagonal});
  return g;
}

std::vector<std::size_t> default_sizes() {
  std::vector<std::size_t> s(14);
  std::iota(s.begin(), s.end(), std::size_t{3});
  return s;
}

HyperGrid default_grid(Family family) {
  const auto sizes = default_sizes();
  if (family == Family::fcm) return fcm_grid(sizes);
  const hmm::CovarianceType covs[] = {hmm::CovarianceType::spherical, hmm::CovarianceType::diagonal,
                                      hmm::CovarianceType::full};
  return hmm_grid(sizes, covs);
}

bool simpler(const HyperParams& a, const HyperParams& b) {
  if (a.size != b.size) return a.size < b.size;
  return cov_rank(a.cov) < cov_rank(b.cov);
}

CvResult cross_validate(SchemeId scheme, const std::vector<LabeledSeries>& train, const HyperGrid& grid,
                        const classify::SchemeOptions& options, const EvalOptions& eval_options, std::uint64_t seed) {
  if (grid.points.empty()) throw UsageError("hyperparameter grid is empty");
  const auto folds = stratified_kfold(train, eval_options.folds, mix_seed(seed, 0));
  const std::size_t k = folds.size();

  CvResult out;
  out.table.resize(grid.points.size());
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    out.table[g].hyper = grid.points[g];
    out.table[g].fold_accuracy.assign(k, 0.0);
    out.table[g].fold_failures.assign(k, 0);
  }

  classify::SchemeOptions inner = options;
  inner.jobs = 1;
  std::vector<std::vector<classify::ModelRun>> runs(grid.points.size() * k);
  parallel_for(grid.points.size() * k, eval_options.jobs, [&](std::size_t task) {
    const std::size_t g = task / k;
    const std::size_t f = task % k;
    const auto clf = classify::train_classifier(scheme, folds[f].train, grid.points[g], inner, mix_seed(seed, f + 1));
    out.table[g].fold_accuracy[f] = fold_accuracy(clf, folds[f].validation, eval_options.lenient_failures);
    out.table[g].fold_failures[f] = clf.failures.size();
    runs[task] = clf.runs;
  });
  for (auto& r : runs) out.runs.insert(out.runs.end(), r.begin(), r.end());

  std::size_t best = 0;
  for (std::size_t g = 0; g < out.table.size(); ++g) {
    auto& row = out.table[g];
    row.mean_accuracy = std::accumulate(row.fold_accuracy.begin(), row.fold_accuracy.end(), 0.0) / static_cast<double>(k);
    if (g == 0) continue;
    const auto& cur = out.table[best];
    if (row.mean_accuracy > cur.mean_accuracy ||
        (row.mean_accuracy == cur.mean_accuracy && simpler(row.hyper, cur.hyper)))
      best = g;
  }
  out.chosen = out.table[best].hyper;
  return out;
}

double evaluate_test(const classify::TrainedClassifier& classifier, const std::vector<LabeledSeries>& test) {
  if (test.empty()) throw DataError("evaluate_test: empty test set");
  std::size_t correct = 0;
  for (const auto& s : test) {
    try {
      correct += classify::predict(classifier, s) == s.label;
    } catch (const DataError&) {
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("spearman: vectors differ in length");
  if (a.size() < 2) throw DataError("spearman: need at least 2 observations");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DataError("spearman: zero rank variance (all values tied)");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<TimingRow> timing_report(std::span<const classify::ModelRun> runs) {
  std::map<std::pair<std::size_t, std::size_t>, TimingRow> groups;
  for (const auto& r : runs) {
    auto& row = groups[{scheme_rank(r.scheme), r.size}];
    row.scheme = r.scheme;
    row.size = r.size;
    ++row.count;
    row.mean_seconds += r.seconds;
    row.mean_iterations += static_cast<double>(r.iterations);
  }
  std::vector<TimingRow> out;
  for (auto& [key, row] : groups) {
    row.mean_seconds /= static_cast<double>(row.count);
    row.mean_iterations /= static_cast<double>(row.count);
    out.push_back(row);
  }
  return out;
}

std::string timing_csv(std::span<const TimingRow> rows) {
  std::ostringstream out;
  out << "scheme,size,models,mean_seconds,mean_iterations\n";
  out << std::setprecision(6);
  for (const auto& r : rows)
    out << classify::to_string(r.scheme) << ',' << r.size << ',' << r.count << ',' << r.mean_seconds << ','
        << r.mean_iterations << '\n';
  return out.str();
}

double SchemeReport::mean_test_accuracy() const {
  if (test_accuracy.empty()) return 0.0;
  return std::accumulate(test_accuracy.begin(), test_accuracy.end(), 0.0) / static_cast<double>(test_accuracy.size());
}

SchemeReport run_scheme(SchemeId scheme, const Dataset& data, const HyperGrid& grid,
                        const classify::SchemeOptions& options, const EvalOptions& eval_options, std::uint64_t seed,
                        std::size_t reruns) {
  const std::uint64_t scheme_seed = mix_seed(seed, scheme_rank(scheme) + 1);
  SchemeReport report;
  report.scheme = scheme;
  report.cv = cross_validate(scheme, data.train(), grid, options, eval_options, scheme_seed);

  classify::SchemeOptions final_options = options;
  final_options.jobs = eval_options.jobs;
  for (std::size_t r = 0; r < std::max<std::size_t>(reruns, 1); ++r) {
    const auto clf = classify::train_classifier(scheme, data.train(), report.cv.chosen, final_options,
                                                mix_seed(scheme_seed, 1000 + r));
    report.test_accuracy.push_back(clf.usable() ? evaluate_test(clf, data.test()) : 0.0);
    report.test_failures.push_back(clf.failures.size());
    report.final_runs.insert(report.final_runs.end(), clf.runs.begin(), clf.runs.end());
  }
  return report;
}

std::string accuracy_csv(std::span<const DatasetReport> reports) {
  const auto all = classify::all_schemes();
  std::ostringstream out;
  out << "dataset,classes";
  for (auto s : all) {
    auto name = classify::to_string(s);
    std::replace(name.begin(), name.end(), '-', '_');
    out << ',' << name << "_accuracy," << name << "_hpar";
  }
  out << '\n' << std::fixed << std::setprecision(2);
  for (const auto& d : reports) {
    out << d.dataset << ',' << d.n_classes;
    for (auto s : all) {
      const auto it = std::find_if(d.schemes.begin(), d.schemes.end(), [&](const auto& r) { return r.scheme == s; });
      if (it == d.schemes.end()) {
        out << ",,";
        continue;
      }
      out << ',' << 100.0 * it->mean_test_accuracy() << ',' << classify::describe(s.family, it->cv.chosen);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tsmb::eval
