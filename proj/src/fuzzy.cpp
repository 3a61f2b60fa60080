#include "tsmb/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tsmb/error.hpp"
#include "tsmb/kernels.hpp"
#include "tsmb/rng.hpp"

namespace tsmb::fuzzy {
namespace {

// Squared-distance threshold for treating a point as lying on a centroid
// (distance below 1e-12).
constexpr double kSingularSq = 1e-24;

std::vector<double> interleave(std::span<const DeltaPoint> pts) {
  std::vector<double> out(2 * pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out[2 * i] = pts[i].z;
    out[2 * i + 1] = pts[i].dz;
  }
  return out;
}

std::vector<double> interleave(const CentroidSet& cs) { return interleave(std::span<const DeltaPoint>(cs.centroids)); }

std::vector<DeltaPoint> distinct_points(std::span<const DeltaPoint> points) {
  std::vector<DeltaPoint> uniq(points.begin(), points.end());
  auto less = [](const DeltaPoint& a, const DeltaPoint& b) { return a.z < b.z || (a.z == b.z && a.dz < b.dz); };
  std::sort(uniq.begin(), uniq.end(), less);
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  return uniq;
}

double weighted_objective(const double* sq_dist, const double* u, std::size_t n, std::size_t P, double m) {
  double j = 0.0;
  for (std::size_t i = 0; i < n * P; ++i)
    if (u[i] > 0.0) j += std::pow(u[i], m) * sq_dist[i];
  return j;
}

}  // namespace

void validate(const CentroidSet& cs) {
  if (cs.size() < 2) throw DataError("centroid set needs at least 2 centroids");
  if (!(cs.m > 1.0)) throw DataError("fuzzification coefficient must exceed 1");
  for (std::size_t a = 0; a < cs.size(); ++a) {
    if (!std::isfinite(cs.centroids[a].z) || !std::isfinite(cs.centroids[a].dz))
      throw DataError("non-finite centroid");
    for (std::size_t b = a + 1; b < cs.size(); ++b) {
      const double dz = cs.centroids[a].z - cs.centroids[b].z;
      const double dd = cs.centroids[a].dz - cs.centroids[b].dz;
      if (dz * dz + dd * dd < kSingularSq)
        throw DataError("centroids " + std::to_string(a) + " and " + std::to_string(b) + " coincide");
    }
  }
}

std::vector<DeltaPoint> embed_deltas(std::span<const double> values) {
  if (values.size() < 2) throw DataError("delta embedding needs at least 2 samples");
  std::vector<DeltaPoint> out(values.size() - 1);
  for (std::size_t i = 1; i < values.size(); ++i) out[i - 1] = {values[i], values[i] - values[i - 1]};
  return out;
}

std::vector<DeltaPoint> embed_deltas(const LabeledSeries& s) { return embed_deltas(std::span<const double>(s.values)); }

void memberships_from_sq_dist(const double* sq_dist, std::size_t n, std::size_t P, double m, double* out) {
  const double exponent = 1.0 / (m - 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double* d = sq_dist + t * P;
    double* u = out + t * P;
    const double dmin = *std::min_element(d, d + P);
    if (dmin < kSingularSq) {
      std::size_t hits = 0;
      for (std::size_t k = 0; k < P; ++k) hits += d[k] < kSingularSq;
      const double share = 1.0 / static_cast<double>(hits);
      for (std::size_t k = 0; k < P; ++k) u[k] = d[k] < kSingularSq ? share : 0.0;
      continue;
    }
    // u_j = 1 / sum_k (d_j / d_k)^(2/(m-1)), rescaled by the nearest
    // centroid so every ratio lies in (0, 1].
    double total = 0.0;
    for (std::size_t k = 0; k < P; ++k) {
      u[k] = std::pow(dmin / d[k], exponent);
      total += u[k];
    }
    for (std::size_t k = 0; k < P; ++k) u[k] /= total;
  }
}

std::vector<double> membership(const DeltaPoint& p, const CentroidSet& cs) {
  const std::size_t P = cs.size();
  std::vector<double> u(P);
  for (std::size_t k = 0; k < P; ++k) {
    const double a = p.z - cs.centroids[k].z;
    const double b = p.dz - cs.centroids[k].dz;
    u[k] = a * a + b * b;
  }
  memberships_from_sq_dist(u.data(), 1, P, cs.m, u.data());
  return u;
}

ActivationSequence fuzzify_series(std::span<const double> values, const CentroidSet& cs) {
  const auto points = embed_deltas(values);
  const auto flat = interleave(points);
  const auto cflat = interleave(cs);
  ActivationSequence seq;
  seq.P = cs.size();
  seq.data.resize(points.size() * seq.P);
  kernels::active().sq_dist_2d(flat.data(), points.size(), cflat.data(), seq.P, seq.data.data());
  memberships_from_sq_dist(seq.data.data(), points.size(), seq.P, cs.m, seq.data.data());
  return seq;
}

ActivationSequence fuzzify_series(const LabeledSeries& s, const CentroidSet& cs) {
  return fuzzify_series(std::span<const double>(s.values), cs);
}

double objective(std::span<const DeltaPoint> points, const CentroidSet& cs) {
  const std::size_t n = points.size();
  const std::size_t P = cs.size();
  const auto flat = interleave(points);
  const auto cflat = interleave(cs);
  std::vector<double> d(n * P), u(n * P);
  kernels::active().sq_dist_2d(flat.data(), n, cflat.data(), P, d.data());
  memberships_from_sq_dist(d.data(), n, P, cs.m, u.data());
  return weighted_objective(d.data(), u.data(), n, P, cs.m);
}

ClusterResult fcm_cluster(std::span<const DeltaPoint> points, std::size_t P, double m,
                          const ClusterParams& params, std::uint64_t seed) {
  if (P < 2) throw DataError("fuzzy c-means needs P >= 2");
  if (!(m > 1.0)) throw DataError("fuzzification coefficient must exceed 1");
  if (!(params.tol > 0.0)) throw DataError("clustering tolerance must be positive");
  for (const auto& p : points)
    if (!std::isfinite(p.z) || !std::isfinite(p.dz)) throw DataError("non-finite point passed to fuzzy c-means");

  const auto uniq = distinct_points(points);
  if (uniq.size() < P)
    throw DataError("fuzzy c-means: " + std::to_string(uniq.size()) + " distinct points for " +
                    std::to_string(P) + " centroids");

  ClusterResult result;
  result.centroids.m = m;
  {
    Rng rng(seed);
    std::vector<std::size_t> idx(uniq.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first P slots are a uniform sample without replacement.
    for (std::size_t i = 0; i < P; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      result.centroids.centroids.push_back(uniq[idx[i]]);
    }
  }

  const auto& kern = kernels::active();
  const std::size_t n = points.size();
  const auto flat = interleave(points);
  std::vector<double> d(n * P), u(n * P), um(n * P);

  auto update_memberships = [&] {
    const auto cflat = interleave(result.centroids);
    kern.sq_dist_2d(flat.data(), n, cflat.data(), P, d.data());
    memberships_from_sq_dist(d.data(), n, P, m, u.data());
    return weighted_objective(d.data(), u.data(), n, P, m);
  };

  for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
    result.objective_history.push_back(update_memberships());
    for (std::size_t i = 0; i < n * P; ++i) um[i] = u[i] > 0.0 ? std::pow(u[i], m) : 0.0;

    double shift = 0.0;
    for (std::size_t k = 0; k < P; ++k) {
      double wsum = 0.0, zsum = 0.0, dzsum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = um[i * P + k];
        wsum += w;
        zsum += w * points[i].z;
        dzsum += w * points[i].dz;
      }
      if (wsum <= 0.0) continue;  // no support: keep the previous position
      DeltaPoint next{zsum / wsum, dzsum / wsum};
      if (!std::isfinite(next.z) || !std::isfinite(next.dz))
        throw DataError("fuzzy c-means produced a non-finite centroid");
      auto& cur = result.centroids.centroids[k];
      shift = std::max(shift, std::hypot(next.z - cur.z, next.dz - cur.dz));
      cur = next;
    }
    result.iterations = iter + 1;
    if (shift < params.tol) break;
  }
  result.objective_history.push_back(update_memberships());
  validate(result.centroids);
  return result;
}

}  // namespace tsmb::fuzzy
