#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsmb/classify.hpp"
#include "tsmb/eval.hpp"

namespace tsmb::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string train_path;
  std::string test_path;
  std::string format = "ts";
  std::string data_dir;
  std::vector<std::string> datasets;
  std::vector<classify::SchemeId> schemes;
  std::vector<std::size_t> hmm_states;
  std::vector<hmm::CovarianceType> covs;
  std::vector<std::size_t> concepts;
  std::optional<std::uint64_t> seed;
  bool znorm = false;
  bool lenient_failures = false;
  std::size_t reruns = 1;
  classify::SchemeOptions options;
  eval::EvalOptions eval;
  std::string out_dir = ".";
};

/// "3-16", "3,5,7" or mixes such as "3-5,8".
std::vector<std::size_t> parse_size_list(const std::string& text);

/// Entry point shared by the executable and the tests. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Pairwise Spearman correlations between the per-dataset test accuracy
/// vectors of every (report, scheme) column, as CSV. Throws DataError when the
/// reports cover different datasets.
std::string compare_reports(const std::vector<std::string>& report_paths);

}  // namespace tsmb::cli
