#include <doctest.h>

#include <cmath>
#include <limits>

#include "tsmb/de.hpp"
#include "tsmb/error.hpp"

using namespace tsmb::de;

namespace {

double sphere(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("one-dimensional quadratic") {
  Bounds b[] = {{-1, 1}};
  auto r = de_optimize([](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); }, b, {}, 4);
  CHECK(std::abs(r.best[0] - 0.3) < 1e-3);
}

TEST_CASE("nine-dimensional sphere") {
  std::vector<Bounds> b(9, {-1, 1});
  auto r = de_optimize(sphere, b, {}, 1);
  CHECK(r.best_value < 1e-2);
  CHECK(r.iterations <= 150);
  CHECK(r.best_history.size() == r.iterations + 1);
  for (std::size_t i = 1; i < r.best_history.size(); ++i) CHECK(r.best_history[i] <= r.best_history[i - 1]);
  for (double v : r.best) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("a seeded vector is never lost") {
  std::vector<Bounds> b(4, {-1, 1});
  auto f = [](std::span<const double> x) { return sphere(x) + std::sin(7 * x[0]); };
  std::vector<std::vector<double>> seeds{{0, 0, 0, 0}};
  DeParams p;
  p.max_iter = 3;
  auto r = de_optimize(f, b, p, 2, seeds);
  CHECK(r.best_value <= f(seeds[0]));
  CHECK(r.best_history.front() <= f(seeds[0]));
}

TEST_CASE("determinism") {
  std::vector<Bounds> b(3, {-2, 1});
  auto a = de_optimize(sphere, b, {}, 77);
  auto c = de_optimize(sphere, b, {}, 77);
  CHECK(a.best == c.best);
  CHECK(a.best_history == c.best_history);
}

TEST_CASE("errors") {
  std::vector<Bounds> b(2, {-1, 1});
  auto bad = [](std::span<const double> x) { return x[0] > 0 ? std::numeric_limits<double>::quiet_NaN() : 0.0; };
  CHECK_THROWS_AS(de_optimize(bad, b, {}, 1), tsmb::DataError);
  std::vector<Bounds> inverted{{1, -1}};
  CHECK_THROWS_AS(de_optimize(sphere, inverted, {}, 1), tsmb::DataError);
  DeParams p;
  p.mutation = 0;
  CHECK_THROWS_AS(validate(p), tsmb::UsageError);
  std::vector<std::vector<double>> wrong{{0, 0, 0}};
  CHECK_THROWS_AS(de_optimize(sphere, b, {}, 1, wrong), tsmb::DataError);
}
