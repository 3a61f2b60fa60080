#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace tsmb::de {

/// Differential Evolution settings. Population size is
/// popsize_factor * dimension (at least 4).
struct DeParams {
  std::size_t max_iter = 150;
  double mutation = 0.5;
  double recombination = 0.5;
  std::size_t popsize_factor = 10;
  double tol = 0.01;

  std::size_t population_size(std::size_t dim) const noexcept {
    const std::size_t n = popsize_factor * dim;
    return n < 4 ? 4 : n;
  }
};

/// Throws UsageError if any field is out of range.
void validate(const DeParams& p);

struct Bounds {
  double lo;
  double hi;
};

struct DeResult {
  std::vector<double> best;
  double best_value = 0.0;
  /// Generations run after initialization.
  std::size_t iterations = 0;
  /// Best value after initialization and after each generation.
  std::vector<double> best_history;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// DE/rand/1/bin minimizer over a box.
///
/// Initial members are uniform in the box; vectors from `seeded` replace the
/// first members. Each generation builds one trial per member from three
/// distinct others, crosses it binomially with one forced coordinate, clips
/// it to the box, and replaces the member if the trial is no worse. Selection
/// is applied to the whole population after all trials are scored. Stops
/// after max_iter generations or once
///   std(population values) <= tol * |mean(population values)|.
///
/// Throws DataError for invalid bounds, seeds of the wrong size, or an
/// objective returning a non-finite value (the message lists the vector).
DeResult de_optimize(const Objective& objective, std::span<const Bounds> bounds, const DeParams& params,
                     std::uint64_t seed, std::span<const std::vector<double>> seeded = {});

}  // namespace tsmb::de
