#include "tsmb/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tsmb/error.hpp"
#include "tsmb/rng.hpp"

namespace tsmb {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    s = s.substr(1, s.size() - 2);
  return std::string(s);
}

double parse_value(std::string_view token, std::size_t line) {
  token = trim(token);
  if (token.empty()) throw ParseError("empty value", line);
  if (token == "?") throw ParseError("missing value '?' is not supported", line);
  double v = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("non-numeric value '" + std::string(token) + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(token) + "'", line);
  return v;
}

std::vector<double> parse_values(std::string_view text, std::size_t line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto stop = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_value(text.substr(start, stop - start), line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_length(const LabeledSeries& s, std::size_t index, std::size_t line) {
  if (s.values.size() < 2)
    throw ParseError("series " + std::to_string(index) + " has length " +
                         std::to_string(s.values.size()) + " (need at least 2)",
                     line);
}

std::vector<LabeledSeries> parse_csv(const std::string& text) {
  std::vector<LabeledSeries> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = trim(raw);
    if (body.empty()) continue;
    LabeledSeries s;
    std::size_t comma = 0;
    if (body.front() == '"') {
      // Quoted label; "" stands for one quote character.
      std::size_t i = 1;
      for (;; ++i) {
        if (i >= body.size()) throw ParseError("unterminated quoted label", line);
        if (body[i] != '"') {
          s.label += body[i];
        } else if (i + 1 < body.size() && body[i + 1] == '"') {
          s.label += '"';
          ++i;
        } else {
          break;
        }
      }
      comma = body.find_first_not_of(" \t", i + 1);
      if (comma != std::string_view::npos && body[comma] != ',')
        throw ParseError("text after closing quote of label", line);
    } else {
      comma = body.find(',');
      s.label = std::string(trim(body.substr(0, comma)));
    }
    if (comma == std::string_view::npos) throw ParseError("row has a label but no values", line);
    if (s.label.empty()) throw ParseError("empty label", line);
    s.values = parse_values(body.substr(comma + 1), line);
    check_length(s, out.size(), line);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSeries> parse_ts(const std::string& text) {
  std::vector<LabeledSeries> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  bool in_data = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = trim(raw);
    if (body.empty() || body.front() == '#') continue;
    if (!in_data) {
      if (body.front() != '@') throw ParseError("expected '@' header line before @data", line);
      std::string key(body.substr(0, body.find_first_of(" \t")));
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      if (key == "@data") in_data = true;
      continue;
    }
    const auto colon = body.rfind(':');
    if (colon == std::string_view::npos) throw ParseError("missing ':<label>' suffix", line);
    const auto values = body.substr(0, colon);
    if (values.find(':') != std::string_view::npos)
      throw ParseError("multivariate series are not supported", line);
    LabeledSeries s;
    s.label = unquote(body.substr(colon + 1));
    if (s.label.empty()) throw ParseError("empty label", line);
    s.values = parse_values(values, line);
    check_length(s, out.size(), line);
    out.push_back(std::move(s));
  }
  if (!in_data) throw ParseError("no @data section", 0);
  return out;
}

}  // namespace

void validate_series(const LabeledSeries& s, const std::string& what) {
  if (s.values.size() < 2)
    throw DataError(what + ": length " + std::to_string(s.values.size()) + " < 2");
  for (double v : s.values)
    if (!std::isfinite(v)) throw DataError(what + ": non-finite value");
}

DataFormat parse_data_format(const std::string& name) {
  if (name == "ts") return DataFormat::ts;
  if (name == "csv") return DataFormat::csv;
  throw UsageError("unknown data format '" + name + "' (expected ts or csv)");
}

Dataset::Dataset(std::string name, std::vector<LabeledSeries> train, std::vector<LabeledSeries> test)
    : name_(std::move(name)), train_(std::move(train)), test_(std::move(test)) {
  if (train_.empty()) throw DataError("dataset '" + name_ + "' has no training series");
  for (std::size_t i = 0; i < train_.size(); ++i) validate_series(train_[i], "train series " + std::to_string(i));
  for (std::size_t i = 0; i < test_.size(); ++i) validate_series(test_[i], "test series " + std::to_string(i));
  std::set<std::string> labels;
  for (const auto& s : train_) labels.insert(s.label);
  for (const auto& s : test_) labels.insert(s.label);
  classes_.assign(labels.begin(), labels.end());
}

std::vector<LabeledSeries> parse_series(const std::string& text, DataFormat format, const std::string& source) {
  std::vector<LabeledSeries> out;
  try {
    out = format == DataFormat::csv ? parse_csv(text) : parse_ts(text);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), source);
  }
  if (out.empty()) throw ParseError("empty file (no series)", 0, source);
  return out;
}

std::vector<LabeledSeries> read_series_file(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_series(buf.str(), format, path.string());
}

Dataset load_dataset(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                     DataFormat format, std::string name) {
  if (name.empty()) {
    name = train_path.stem().string();
    for (const char* suffix : {"_TRAIN", "_train"}) {
      const std::string_view sv(suffix);
      if (name.size() > sv.size() && name.compare(name.size() - sv.size(), sv.size(), sv) == 0)
        name.resize(name.size() - sv.size());
    }
  }
  return Dataset(std::move(name), read_series_file(train_path, format), read_series_file(test_path, format));
}

std::string to_csv(const std::vector<LabeledSeries>& series) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& s : series) {
    out << '"';
    for (char c : s.label) out << (c == '"' ? "\"\"" : std::string(1, c));
    out << '"';
    for (double v : s.values) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> distinct_labels(const std::vector<LabeledSeries>& series) {
  std::set<std::string> labels;
  for (const auto& s : series) labels.insert(s.label);
  return {labels.begin(), labels.end()};
}

std::vector<Fold> stratified_kfold(const std::vector<LabeledSeries>& series, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DataError("stratified_kfold: k must be at least 2");
  if (series.size() < k) throw DataError("stratified_kfold: fewer series than folds");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < series.size(); ++i) by_class[series[i].label].push_back(i);
  for (const auto& [label, members] : by_class)
    if (members.size() < 2)
      throw DataError("stratified_kfold: class '" + label +
                      "' has a single member and cannot appear in every training part");

  Rng rng(seed);
  std::vector<std::size_t> fold_of(series.size());
  std::size_t position = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) fold_of[idx] = position++ % k;
  }

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      if (fold_of[i] == f) {
        folds[f].validation.push_back(series[i]);
        folds[f].validation_indices.push_back(i);
      } else {
        folds[f].train.push_back(series[i]);
      }
    }
  }
  return folds;
}

LabeledSeries znormalize(const LabeledSeries& s) {
  LabeledSeries out{s.values, s.label};
  const double n = static_cast<double>(s.values.size());
  if (s.values.empty()) return out;
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : s.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : out.values) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
  return out;
}

std::vector<LabeledSeries> znormalize_all(const std::vector<LabeledSeries>& series) {
  std::vector<LabeledSeries> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(znormalize(s));
  return out;
}

}  // namespace tsmb
