#include "tsmb/de.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsmb/error.hpp"
#include "tsmb/rng.hpp"

namespace tsmb::de {
namespace {

double evaluate(const Objective& f, std::span<const double> x, std::size_t& evaluations) {
  const double v = f(x);
  ++evaluations;
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "objective returned " << v << " at [";
    for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
    msg << "]";
    throw DataError(msg.str());
  }
  return v;
}

bool converged(std::span<const double> values, double tol) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / n) <= tol * std::abs(mean);
}

}  // namespace

void validate(const DeParams& p) {
  if (p.max_iter == 0) throw UsageError("DE max_iter must be positive");
  if (!(p.mutation > 0.0 && p.mutation < 2.0)) throw UsageError("DE mutation must lie in (0, 2)");
  if (!(p.recombination >= 0.0 && p.recombination <= 1.0)) throw UsageError("DE recombination must lie in [0, 1]");
  if (p.popsize_factor == 0) throw UsageError("DE popsize factor must be positive");
  if (!(p.tol >= 0.0)) throw UsageError("DE tolerance must be non-negative");
}

DeResult de_optimize(const Objective& objective, std::span<const Bounds> bounds, const DeParams& params,
                     std::uint64_t seed, std::span<const std::vector<double>> seeded) {
  validate(params);
  const std::size_t dim = bounds.size();
  if (dim == 0) throw DataError("DE needs at least one dimension");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) throw DataError("DE bounds must satisfy lo < hi");

  const std::size_t np = params.population_size(dim);
  if (seeded.size() > np) throw DataError("more seeded vectors than population members");

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_member(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, dim - 1);

  std::vector<double> pop(np * dim);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t d = 0; d < dim; ++d) pop[i * dim + d] = bounds[d].lo + unit(rng) * (bounds[d].hi - bounds[d].lo);
  for (std::size_t s = 0; s < seeded.size(); ++s) {
    if (seeded[s].size() != dim) throw DataError("seeded DE vector has the wrong dimension");
    for (std::size_t d = 0; d < dim; ++d)
      pop[s * dim + d] = std::clamp(seeded[s][d], bounds[d].lo, bounds[d].hi);
  }

  DeResult result;
  std::vector<double> values(np);
  for (std::size_t i = 0; i < np; ++i)
    values[i] = evaluate(objective, {pop.data() + i * dim, dim}, result.evaluations);

  std::size_t best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.best_history.push_back(values[best]);

  std::vector<double> trials(np * dim);
  std::vector<double> trial_values(np);
  for (std::size_t gen = 0; gen < params.max_iter; ++gen) {
    if (converged(values, params.tol)) break;
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = pick_member(rng); while (r1 == i);
      do r2 = pick_member(rng); while (r2 == i || r2 == r1);
      do r3 = pick_member(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = pick_dim(rng);
      double* trial = trials.data() + i * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        if (d == forced || unit(rng) < params.recombination) {
          const double v = pop[r1 * dim + d] + params.mutation * (pop[r2 * dim + d] - pop[r3 * dim + d]);
          trial[d] = std::clamp(v, bounds[d].lo, bounds[d].hi);
        } else {
          trial[d] = pop[i * dim + d];
        }
      }
    }
    for (std::size_t i = 0; i < np; ++i)
      trial_values[i] = evaluate(objective, {trials.data() + i * dim, dim}, result.evaluations);
    for (std::size_t i = 0; i < np; ++i) {
      if (trial_values[i] <= values[i]) {
        std::copy_n(trials.data() + i * dim, dim, pop.data() + i * dim);
        values[i] = trial_values[i];
      }
    }
    best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    result.best_history.push_back(values[best]);
    result.iterations = gen + 1;
  }

  result.best.assign(pop.begin() + best * dim, pop.begin() + (best + 1) * dim);
  result.best_value = values[best];
  return result;
}

}  // namespace tsmb::de
