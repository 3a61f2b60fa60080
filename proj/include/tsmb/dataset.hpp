#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tsmb {

/// A univariate, labeled time series. At least two finite samples.
struct LabeledSeries {
  std::vector<double> values;
  std::string label;

  std::size_t length() const noexcept { return values.size(); }
};

/// Throws DataError if the series violates the LabeledSeries invariants.
/// `what` names the series in the message.
void validate_series(const LabeledSeries& s, const std::string& what);

enum class DataFormat { ts, csv };

DataFormat parse_data_format(const std::string& name);

class Dataset {
 public:
  Dataset() = default;
  /// Validates every series and derives the sorted class list from the
  /// union of train and test labels.
  Dataset(std::string name, std::vector<LabeledSeries> train, std::vector<LabeledSeries> test);

  const std::string& name() const noexcept { return name_; }
  const std::vector<LabeledSeries>& train() const noexcept { return train_; }
  const std::vector<LabeledSeries>& test() const noexcept { return test_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }

 private:
  std::string name_;
  std::vector<LabeledSeries> train_;
  std::vector<LabeledSeries> test_;
  std::vector<std::string> classes_;
};

/// Parses a list of series from text in the given format. `source` is used
/// in error messages.
std::vector<LabeledSeries> parse_series(const std::string& text, DataFormat format,
                                        const std::string& source = "<input>");

std::vector<LabeledSeries> read_series_file(const std::filesystem::path& path, DataFormat format);

Dataset load_dataset(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                     DataFormat format, std::string name = {});

/// CSV rendering: one row per series, quoted label first, then values with
/// round-trip precision.
std::string to_csv(const std::vector<LabeledSeries>& series);

/// Sorted distinct labels.
std::vector<std::string> distinct_labels(const std::vector<LabeledSeries>& series);

struct Fold {
  std::vector<LabeledSeries> train;
  std::vector<LabeledSeries> validation;
  /// Indices into the input list, same order as `validation`.
  std::vector<std::size_t> validation_indices;
};

/// Stratified k-fold split. Members of each class (in sorted label order) are
/// shuffled with `seed` and dealt round-robin; the dealing position carries
/// over from one class to the next so fold sizes stay balanced. Each class
/// therefore lands floor(n_c/k) or ceil(n_c/k) times in every validation part.
std::vector<Fold> stratified_kfold(const std::vector<LabeledSeries>& series, std::size_t k,
                                   std::uint64_t seed);

/// (x - mean) / population std; constant series become all zeros.
LabeledSeries znormalize(const LabeledSeries& s);

std::vector<LabeledSeries> znormalize_all(const std::vector<LabeledSeries>& series);

}  // namespace tsmb
