#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "synthetic.hpp"
#include "tsmb/cli.hpp"
#include "tsmb/error.hpp"
#include "tsmb/io.hpp"
#include "tsmb/serialize.hpp"

using namespace tsmb;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "tsmb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("tsmb_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_dataset(const TempDir& dir) {
  write_file_atomic(dir / "syn_TRAIN.csv", to_csv(testing::sine_vs_ar(4, 40, 1)));
  write_file_atomic(dir / "syn_TEST.csv", to_csv(testing::sine_vs_ar(4, 40, 2)));
}

std::vector<std::string> bench_args(const TempDir& dir, const std::string& out) {
  return {"benchmark", "--train", dir / "syn_TRAIN.csv", "--test", dir / "syn_TEST.csv", "--format", "csv",
          "--seed", "7", "--states", "2", "--covs", "diagonal", "--concepts", "3", "--de-max-iter", "8",
          "--em-restarts", "1", "--jobs", "1", "--out", dir / out};
}

std::string report(const std::string& dataset_accs) {
  // dataset_accs: "name:acc;name:acc"
  serialize::Json j{{"format_version", 1}, {"datasets", serialize::Json::array()}};
  std::istringstream in(dataset_accs);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto colon = item.find(':');
    j["datasets"].push_back({{"dataset", item.substr(0, colon)},
                             {"schemes", {{{"scheme", "hmm-1c"}, {"test_accuracy", std::stod(item.substr(colon + 1))}}}}});
  }
  return j.dump();
}

}  // namespace

TEST_CASE("size lists") {
  CHECK(cli::parse_size_list("3-5") == std::vector<std::size_t>{3, 4, 5});
  CHECK(cli::parse_size_list("7,3,5") == std::vector<std::size_t>{3, 5, 7});
  CHECK(cli::parse_size_list("3-4,8") == std::vector<std::size_t>{3, 4, 8});
  CHECK_THROWS_AS(cli::parse_size_list("5-3"), UsageError);
  CHECK_THROWS_AS(cli::parse_size_list("x"), UsageError);
  CHECK_THROWS_AS(cli::parse_size_list("0"), UsageError);
}

TEST_CASE("usage and IO exit codes") {
  TempDir dir;
  write_dataset(dir);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"train", "--train", dir / "syn_TRAIN.csv", "--format", "csv", "--schemes", "svm"}).code == cli::kExitUsage);
  auto missing = run({"train", "--train", dir / "nope.csv", "--format", "csv", "--schemes", "hmm-1c"});
  CHECK(missing.code == cli::kExitDataError);
  CHECK(missing.err.find("nope.csv") != std::string::npos);
  ::unsetenv("TSMB_SEED");
  auto args = bench_args(dir, "r");
  args.erase(args.begin() + 7, args.begin() + 9);
  CHECK(run(args).code == cli::kExitUsage);
  ::setenv("TSMB_SEED", "7", 1);
  args.push_back("--schemes");
  args.push_back("hmm-1c");
  CHECK(run(args).code == cli::kExitOk);
  ::unsetenv("TSMB_SEED");
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("train writes one bundle that inspect can read") {
  TempDir dir;
  write_dataset(dir);
  auto r = run({"train", "--train", dir / "syn_TRAIN.csv", "--test", dir / "syn_TEST.csv", "--format", "csv",
                "--schemes", "hmm-1c", "--states", "2", "--seed", "1", "--out", dir / "models"});
  REQUIRE(r.code == cli::kExitOk);
  const auto bundle = dir / "models/syn_hmm-1c.json";
  CHECK(fs::exists(bundle));
  CHECK(fs::directory_iterator(dir.path / "models") != fs::directory_iterator());
  auto shown = run({"inspect", bundle});
  CHECK(shown.code == cli::kExitOk);
  CHECK(shown.out.find("HMM 1C") != std::string::npos);
  CHECK(run({"inspect", dir / "missing.json"}).code == cli::kExitDataError);
}

TEST_CASE("benchmark outputs, determinism and reruns") {
  TempDir dir;
  write_dataset(dir);
  auto a = run(bench_args(dir, "a"));
  REQUIRE(a.code == cli::kExitOk);
  std::size_t lines = 0;
  for (char c : a.out) lines += c == '\n';
  CHECK(lines == 4);
  for (const char* f : {"report.json", "accuracy.csv", "timing.csv"}) CHECK(fs::exists(dir.path / "a" / f));
  REQUIRE(run(bench_args(dir, "b")).code == cli::kExitOk);
  CHECK(read_text_file(dir / "a/report.json") == read_text_file(dir / "b/report.json"));

  auto args = bench_args(dir, "c");
  args.insert(args.end(), {"--reruns", "3", "--schemes", "fcm-1c"});
  auto c = run(args);
  REQUIRE(c.code == cli::kExitOk);
  CHECK(c.out.find("+/-") != std::string::npos);
  auto j = serialize::Json::parse(read_text_file(dir / "c/report.json"));
  CHECK(j["datasets"][0]["schemes"][0]["test_accuracy_runs"].size() == 3);
}

TEST_CASE("config file values are overridden by flags") {
  TempDir dir;
  write_dataset(dir);
  write_file_atomic(dir / "cfg.json",
                    R"({"train": ")" + (dir / "syn_TRAIN.csv") + R"(", "test": ")" + (dir / "syn_TEST.csv") +
                        R"(", "format": "csv", "schemes": ["fcm-nn"], "concepts": [4], "seed": 3,
                        "de_max_iter": 5, "per_model_centroids": true})");
  auto r = run({"benchmark", "--config", dir / "cfg.json", "--concepts", "3", "--out", dir / "o"});
  REQUIRE(r.code == cli::kExitOk);
  auto j = serialize::Json::parse(read_text_file(dir / "o/report.json"));
  CHECK(j["config"]["concepts"] == serialize::Json::array({3}));
  CHECK(j["config"]["options"]["shared_centroids"] == false);
  CHECK(j["datasets"][0]["schemes"].size() == 1);
  write_file_atomic(dir / "broken.json", "{");
  CHECK(run({"benchmark", "--config", dir / "broken.json"}).code == cli::kExitDataError);
}

TEST_CASE("compare") {
  TempDir dir;
  write_file_atomic(dir / "a.json", report("d1:0.9;d2:0.5;d3:0.7"));
  write_file_atomic(dir / "b.json", report("d1:0.1;d2:0.8;d3:0.4"));
  write_file_atomic(dir / "c.json", report("d1:0.3;d2:0.4;d3:0.9"));
  write_file_atomic(dir / "x.json", report("d1:0.3;d4:0.4;d3:0.9"));

  auto self = cli::compare_reports({dir / "a.json", dir / "a.json"});
  CHECK(self.find(",1,1\n") != std::string::npos);
  auto rev = cli::compare_reports({dir / "a.json", dir / "b.json"});
  CHECK(rev.find(",-1\n") != std::string::npos);
  auto three = cli::compare_reports({dir / "a.json", dir / "b.json", dir / "c.json"});
  std::size_t rows = 0;
  for (char ch : three) rows += ch == '\n';
  CHECK(rows == 4);
  CHECK_THROWS_WITH_AS(cli::compare_reports({dir / "a.json", dir / "x.json"}), doctest::Contains("d4"), DataError);
  auto r = run({"compare", dir / "a.json", dir / "x.json"});
  CHECK(r.code == cli::kExitDataError);
  CHECK(r.err.find("d2") != std::string::npos);
  CHECK(run({"compare", dir / "a.json", dir / "b.json", "--out", dir / "corr.csv"}).code == cli::kExitOk);
  CHECK(read_text_file(dir / "corr.csv") == rev);
}
