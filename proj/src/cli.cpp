#include "tsmb/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "tsmb/dataset.hpp"
#include "tsmb/error.hpp"
#include "tsmb/io.hpp"
#include "tsmb/serialize.hpp"

namespace tsmb::cli {
namespace {

namespace fs = std::filesystem;
using serialize::Json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::uint64_t parse_seed(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 0);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + ": '" + s + "' is not a non-negative integer");
  }
}

/// Raw option strings; list-valued options are parsed after CLI11 is done so
/// that config-file values and flags go through the same path.
struct RawOptions {
  std::string train, test, format = "ts", data_dir, datasets, out = ".", config;
  std::string schemes = "hmm-1c,hmm-nn,fcm-1c,fcm-nn";
  std::string states = "3-16", covs = "spherical,diagonal,full", concepts = "3-16";
  std::string seed;
  std::size_t folds = 3, reruns = 1, jobs = 0;
  double tau = 5.0, fuzzy_m = 2.0;
  std::size_t de_max_iter = 150, de_popsize = 10, em_max_iter = 50, em_restarts = 10;
  double de_mutation = 0.5, de_recombination = 0.5, de_tol = 0.01, em_tol = 1e-3;
  bool znorm = false, hmm_delta = false, shared_centroids = false, per_model_centroids = false, lenient = false;
};

void add_data_options(CLI::App& cmd, RawOptions& raw) {
  cmd.add_option("--train", raw.train, "Training split file");
  cmd.add_option("--test", raw.test, "Test split file");
  cmd.add_option("--format", raw.format, "Input format: ts or csv");
  cmd.add_option("--data-dir", raw.data_dir, "Directory holding <Name>/<Name>_TRAIN.ts style datasets");
  cmd.add_option("--datasets", raw.datasets, "Comma-separated dataset names under --data-dir");
  cmd.add_option("--schemes", raw.schemes, "Comma-separated: hmm-1c,hmm-nn,fcm-1c,fcm-nn");
  cmd.add_option("--seed", raw.seed, "Master seed (falls back to TSMB_SEED)");
  cmd.add_option("--out", raw.out, "Output directory");
  cmd.add_option("--config", raw.config, "JSON config file; command-line flags override it");
  cmd.add_option("--jobs", raw.jobs, "Worker threads (0 = all cores)");
  cmd.add_option("--tau", raw.tau, "FCM sigmoid steepness");
  cmd.add_option("--fuzzy-m", raw.fuzzy_m, "Fuzzy c-means fuzzification coefficient");
  cmd.add_option("--de-max-iter", raw.de_max_iter, "DE generations");
  cmd.add_option("--de-mutation", raw.de_mutation, "DE mutation factor");
  cmd.add_option("--de-recombination", raw.de_recombination, "DE crossover probability");
  cmd.add_option("--de-popsize", raw.de_popsize, "DE population size per dimension");
  cmd.add_option("--de-tol", raw.de_tol, "DE relative convergence tolerance");
  cmd.add_option("--em-max-iter", raw.em_max_iter, "Baum-Welch iterations");
  cmd.add_option("--em-tol", raw.em_tol, "Baum-Welch log-likelihood tolerance");
  cmd.add_option("--em-restarts", raw.em_restarts, "Baum-Welch random restarts");
  cmd.add_flag("--znorm", raw.znorm, "Z-normalize every series");
  cmd.add_flag("--hmm-delta", raw.hmm_delta, "Feed HMMs (value, delta) observations");
  cmd.add_flag("--shared-centroids", raw.shared_centroids, "One fuzzy c-means fit shared by all FCM models (default)");
  cmd.add_flag("--per-model-centroids", raw.per_model_centroids, "Each FCM model clusters only its own training points");
  cmd.add_flag("--lenient-failures", raw.lenient, "Ignore failed models instead of scoring the CV fold 0");
  for (auto* opt : cmd.get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

/// Turns a JSON config object into "--key value" arguments.
std::vector<std::string> config_args(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  if (!j.is_object()) throw ParseError(path.string() + ": config must be a JSON object", 0);
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back(flag);
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

RunConfig resolve(const RawOptions& raw, bool need_seed) {
  RunConfig cfg;
  cfg.train_path = raw.train;
  cfg.test_path = raw.test;
  cfg.format = raw.format;
  parse_data_format(cfg.format);
  cfg.data_dir = raw.data_dir;
  cfg.datasets = split(raw.datasets, ',');
  for (const auto& s : split(raw.schemes, ',')) cfg.schemes.push_back(classify::parse_scheme(s));
  if (cfg.schemes.empty()) throw UsageError("at least one scheme must be selected");
  cfg.hmm_states = parse_size_list(raw.states);
  cfg.concepts = parse_size_list(raw.concepts);
  for (const auto& c : split(raw.covs, ',')) cfg.covs.push_back(hmm::parse_covariance_type(c));
  if (cfg.covs.empty()) throw UsageError("at least one covariance type must be selected");

  if (!raw.seed.empty()) {
    cfg.seed = parse_seed(raw.seed, "--seed");
  } else if (const char* env = std::getenv("TSMB_SEED"); env != nullptr && *env != '\0') {
    cfg.seed = parse_seed(env, "TSMB_SEED");
  }
  if (need_seed && !cfg.seed) throw UsageError("a seed is required (--seed or TSMB_SEED)");

  cfg.znorm = raw.znorm;
  cfg.lenient_failures = raw.lenient;
  cfg.reruns = std::max<std::size_t>(raw.reruns, 1);
  cfg.options.tau = raw.tau;
  cfg.options.fuzzy_m = raw.fuzzy_m;
  cfg.options.hmm_delta = raw.hmm_delta;
  if (raw.shared_centroids && raw.per_model_centroids)
    throw UsageError("--shared-centroids and --per-model-centroids are mutually exclusive");
  cfg.options.shared_centroids = !raw.per_model_centroids;
  cfg.options.de = {raw.de_max_iter, raw.de_mutation, raw.de_recombination, raw.de_popsize, raw.de_tol};
  de::validate(cfg.options.de);
  cfg.options.em = {raw.em_max_iter, raw.em_tol, raw.em_restarts};
  cfg.options.jobs = raw.jobs;
  if (!(cfg.options.tau > 0.0)) throw UsageError("--tau must be positive");
  if (!(cfg.options.fuzzy_m > 1.0)) throw UsageError("--fuzzy-m must exceed 1");
  if (raw.em_max_iter == 0 || raw.em_restarts == 0) throw UsageError("EM iterations and restarts must be positive");
  cfg.eval.folds = raw.folds;
  cfg.eval.lenient_failures = raw.lenient;
  cfg.eval.jobs = raw.jobs;
  if (cfg.eval.folds < 2) throw UsageError("--folds must be at least 2");
  cfg.out_dir = raw.out;
  return cfg;
}

std::vector<Dataset> load_datasets(const RunConfig& cfg) {
  const auto format = parse_data_format(cfg.format);
  std::vector<Dataset> out;
  auto prepare = [&](Dataset d) {
    if (!cfg.znorm) return d;
    return Dataset(d.name(), znormalize_all(d.train()), znormalize_all(d.test()));
  };
  if (!cfg.train_path.empty()) {
    if (!cfg.datasets.empty()) throw UsageError("use either --train/--test or --data-dir/--datasets, not both");
    if (cfg.test_path.empty()) {
      auto train = read_series_file(cfg.train_path, format);
      std::string name = fs::path(cfg.train_path).stem().string();
      out.push_back(prepare(Dataset(name, std::move(train), {})));
    } else {
      out.push_back(prepare(load_dataset(cfg.train_path, cfg.test_path, format)));
    }
    return out;
  }
  if (cfg.datasets.empty()) throw UsageError("no data: give --train/--test or --data-dir with --datasets");
  const std::string ext = format == DataFormat::ts ? ".ts" : ".csv";
  for (const auto& name : cfg.datasets) {
    fs::path base = fs::path(cfg.data_dir) / name;
    fs::path train = base / (name + "_TRAIN" + ext);
    fs::path test = base / (name + "_TEST" + ext);
    if (!fs::exists(train)) {
      train = fs::path(cfg.data_dir) / (name + "_TRAIN" + ext);
      test = fs::path(cfg.data_dir) / (name + "_TEST" + ext);
    }
    out.push_back(prepare(load_dataset(train, test, format, name)));
  }
  return out;
}

eval::HyperGrid grid_for(const RunConfig& cfg, classify::Family family) {
  return family == classify::Family::hmm ? eval::hmm_grid(cfg.hmm_states, cfg.covs) : eval::fcm_grid(cfg.concepts);
}

std::string display_name(classify::SchemeId s) {
  std::string name = classify::to_string(s);
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(name.begin(), name.end(), '-', ' ');
  return name;
}

Json config_json(const RunConfig& cfg) {
  Json schemes = Json::array();
  for (auto s : cfg.schemes) schemes.push_back(classify::to_string(s));
  Json covs = Json::array();
  for (auto c : cfg.covs) covs.push_back(hmm::to_string(c));
  return Json{{"seed", cfg.seed.value_or(0)},
              {"schemes", schemes},
              {"hmm_states", cfg.hmm_states},
              {"covs", covs},
              {"concepts", cfg.concepts},
              {"folds", cfg.eval.folds},
              {"reruns", cfg.reruns},
              {"znorm", cfg.znorm},
              {"lenient_failures", cfg.lenient_failures},
              {"options", serialize::to_json(cfg.options)}};
}

int cmd_train(const RunConfig& cfg, const RawOptions& raw, std::ostream& out) {
  const auto datasets = load_datasets(cfg);
  const std::uint64_t seed = cfg.seed.value_or(0);
  for (const auto& data : datasets) {
    for (auto scheme : cfg.schemes) {
      classify::HyperParams hyper;
      if (scheme.family == classify::Family::hmm) {
        hyper.size = cfg.hmm_states.front();
        hyper.cov = cfg.covs.front();
      } else {
        hyper.size = cfg.concepts.front();
      }
      const auto clf = classify::train_classifier(scheme, data.train(), hyper, cfg.options, seed);
      const fs::path path = fs::path(raw.out) / (data.name() + "_" + classify::to_string(scheme) + ".json");
      write_file_atomic(path, serialize::to_json(clf).dump(2) + "\n");
      out << display_name(scheme) << " (" << classify::describe(scheme.family, hyper) << "): " << clf.bank.size()
          << " models, " << clf.failures.size() << " failures -> " << path.string();
      if (!data.test().empty() && clf.usable())
        out << ", test accuracy " << std::fixed << std::setprecision(2) << 100.0 * eval::evaluate_test(clf, data.test())
            << "%" << std::defaultfloat;
      out << "\n";
    }
  }
  return kExitOk;
}

int cmd_benchmark(const RunConfig& cfg, std::ostream& out) {
  const auto datasets = load_datasets(cfg);
  for (const auto& d : datasets)
    if (d.test().empty()) throw DataError("dataset '" + d.name() + "' has no test split");

  std::vector<eval::DatasetReport> reports;
  std::vector<classify::ModelRun> runs;
  for (const auto& data : datasets) {
    eval::DatasetReport rep;
    rep.dataset = data.name();
    rep.n_classes = data.classes().size();
    rep.n_train = data.train().size();
    rep.n_test = data.test().size();
    for (auto scheme : cfg.schemes) {
      auto sr = eval::run_scheme(scheme, data, grid_for(cfg, scheme.family), cfg.options, cfg.eval, *cfg.seed, cfg.reruns);
      runs.insert(runs.end(), sr.cv.runs.begin(), sr.cv.runs.end());
      runs.insert(runs.end(), sr.final_runs.begin(), sr.final_runs.end());

      out << std::left << std::setw(24) << data.name() << std::setw(4) << rep.n_classes << std::setw(8)
          << display_name(scheme) << std::right << std::fixed << std::setprecision(2) << std::setw(7)
          << 100.0 * sr.mean_test_accuracy();
      if (sr.test_accuracy.size() > 1) {
        const auto [lo, hi] = std::minmax_element(sr.test_accuracy.begin(), sr.test_accuracy.end());
        out << " +/- " << 50.0 * (*hi - *lo) << " [" << 100.0 * *lo << ", " << 100.0 * *hi << "]";
      }
      out << "  " << classify::describe(scheme.family, sr.cv.chosen) << std::defaultfloat << "\n";
      rep.schemes.push_back(std::move(sr));
    }
    reports.push_back(std::move(rep));
  }

  const fs::path dir(cfg.out_dir);
  write_file_atomic(dir / "report.json", serialize::report_json(reports, config_json(cfg)).dump(2) + "\n");
  write_file_atomic(dir / "accuracy.csv", eval::accuracy_csv(reports));
  write_file_atomic(dir / "timing.csv", eval::timing_csv(eval::timing_report(runs)));
  return kExitOk;
}

void print_bundle(const classify::TrainedClassifier& c, std::ostream& out) {
  out << "scheme:      " << display_name(c.scheme) << "\n";
  out << "hyperparams: " << classify::describe(c.scheme.family, c.hyper) << "\n";
  out << "classes:    ";
  for (const auto& l : c.classes) out << " " << l;
  out << "\nmodels:      " << c.bank.size() << "\nfailures:    " << c.failures.size() << "\n";
  for (const auto& f : c.failures) out << "  [" << f.owner_index << "] " << f.owner_label << ": " << f.reason << "\n";
  out << std::setprecision(4);
  for (const auto& e : c.bank) {
    out << "\n[" << e.owner_index << "] label " << e.owner_label << "\n";
    if (const auto* h = std::get_if<hmm::GaussianHmm>(&e.model)) {
      out << "  states " << h->n_states << ", dim " << h->dim << ", covariance " << hmm::to_string(h->cov_type) << "\n";
      out << "  pi " << h->start.transpose() << "\n";
      for (std::size_t k = 0; k < h->n_states; ++k)
        out << "  state " << k << ": mean " << h->means[k].transpose() << ", var "
            << h->covariances[k].diagonal().transpose() << "\n";
    } else {
      const auto& f = std::get<fcm::FcmModel>(e.model);
      out << "  concepts " << f.P << ", tau " << f.tau << ", M " << f.centroids.m << "\n";
      for (std::size_t k = 0; k < f.centroids.size(); ++k)
        out << "  C" << k + 1 << " = (" << f.centroids.centroids[k].z << ", " << f.centroids.centroids[k].dz << ")\n";
      for (std::size_t j = 0; j < f.P; ++j) {
        out << "  ";
        for (std::size_t i = 0; i < f.P; ++i) out << std::setw(9) << f.weight(j, i);
        out << "\n";
      }
    }
  }
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    const auto dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoul(part));
      } else {
        const auto lo = std::stoul(part.substr(0, dash));
        const auto hi = std::stoul(part.substr(dash + 1));
        if (lo > hi) throw UsageError("empty range '" + part + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad size list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty size list");
  for (auto v : out)
    if (v == 0) throw UsageError("model sizes must be positive");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string compare_reports(const std::vector<std::string>& report_paths) {
  if (report_paths.size() < 2) throw UsageError("compare needs at least two reports");
  struct Column {
    std::string name;
    std::map<std::string, double> acc;
  };
  std::vector<Column> columns;
  std::vector<std::string> reference;
  for (const auto& path : report_paths) {
    Json j;
    try {
      j = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
      throw ParseError(path + ": " + e.what(), 0);
    }
    std::vector<std::string> names;
    std::map<std::string, Column> by_scheme;
    std::vector<std::string> scheme_order;
    try {
      for (const auto& d : j.at("datasets")) {
        const auto ds = d.at("dataset").get<std::string>();
        names.push_back(ds);
        for (const auto& s : d.at("schemes")) {
          const auto scheme = s.at("scheme").get<std::string>();
          if (!by_scheme.count(scheme)) scheme_order.push_back(scheme);
          by_scheme[scheme].name = path + ":" + scheme;
          by_scheme[scheme].acc[ds] = s.at("test_accuracy").get<double>();
        }
      }
    } catch (const Json::exception& e) {
      throw ParseError(path + ": " + e.what(), 0);
    }
    std::sort(names.begin(), names.end());
    if (reference.empty()) {
      reference = names;
    } else if (names != reference) {
      std::vector<std::string> missing, extra;
      std::set_difference(reference.begin(), reference.end(), names.begin(), names.end(), std::back_inserter(missing));
      std::set_difference(names.begin(), names.end(), reference.begin(), reference.end(), std::back_inserter(extra));
      std::string msg = path + ": dataset list differs from " + report_paths.front() + ";";
      for (const auto& m : missing) msg += " missing " + m;
      for (const auto& e : extra) msg += " extra " + e;
      throw DataError(msg);
    }
    for (const auto& s : scheme_order) {
      if (by_scheme[s].acc.size() != names.size())
        throw DataError(path + ": scheme " + s + " is missing from some datasets");
      columns.push_back(std::move(by_scheme[s]));
    }
  }

  std::vector<std::vector<double>> vectors;
  for (const auto& c : columns) {
    std::vector<double> v;
    for (const auto& ds : reference) v.push_back(c.acc.at(ds));
    vectors.push_back(std::move(v));
  }
  std::ostringstream out;
  out << "method";
  for (const auto& c : columns) out << ',' << c.name;
  out << '\n' << std::setprecision(6);
  for (std::size_t a = 0; a < columns.size(); ++a) {
    out << columns[a].name;
    for (std::size_t b = 0; b < columns.size(); ++b) {
      out << ',';
      if (a == b) {
        out << 1;
        continue;
      }
      try {
        out << eval::spearman(vectors[a], vectors[b]);
      } catch (const DataError&) {
        out << "nan";
      }
    }
    out << '\n';
  }
  return out.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"State-based time series classifiers: HMM and FCM, one model per class or per series", "tsmb"};
  app.require_subcommand(1);
  RawOptions raw;

  auto* train = app.add_subcommand("train", "Train classifier bundles with fixed hyperparameters");
  add_data_options(*train, raw);
  train->add_option("--states", raw.states, "Hidden states (first value used)")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  train->add_option("--cov", raw.covs, "Covariance type (first value used)")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  train->add_option("--concepts", raw.concepts, "FCM concepts (first value used)")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* bench = app.add_subcommand("benchmark", "Cross-validate, test and report every selected scheme");
  add_data_options(*bench, raw);
  bench->add_option("--states", raw.states, "HMM state grid, e.g. 3-16")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  bench->add_option("--covs", raw.covs, "Covariance grid")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  bench->add_option("--concepts", raw.concepts, "FCM concept grid, e.g. 3-16")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  bench->add_option("--folds", raw.folds, "Cross-validation folds")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  bench->add_option("--reruns", raw.reruns, "Independent final trainings per scheme")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::vector<std::string> report_paths;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Spearman correlations between benchmark reports");
  compare->add_option("reports", report_paths, "Report JSON files")->required();
  compare->add_option("--out", compare_out, "Write the CSV here instead of standard output");

  std::string bundle_path;
  auto* inspect = app.add_subcommand("inspect", "Pretty-print a classifier bundle");
  inspect->add_option("bundle", bundle_path, "Bundle JSON file")->required();

  // Config-file values go first so explicit flags (TakeLast) override them.
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") {
        auto extra = config_args(args[i + 1]);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
        break;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*compare) {
      const auto csv = compare_reports(report_paths);
      if (compare_out.empty())
        out << csv;
      else
        write_file_atomic(compare_out, csv);
      return kExitOk;
    }
    if (*inspect) {
      Json j;
      try {
        j = Json::parse(read_text_file(bundle_path));
      } catch (const Json::parse_error& e) {
        throw ParseError(bundle_path + ": " + e.what(), 0);
      }
      print_bundle(serialize::classifier_from_json(j), out);
      return kExitOk;
    }
    const bool is_bench = static_cast<bool>(*bench);
    const RunConfig cfg = resolve(raw, is_bench);
    return is_bench ? cmd_benchmark(cfg, out) : cmd_train(cfg, raw, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
}

}  // namespace tsmb::cli
