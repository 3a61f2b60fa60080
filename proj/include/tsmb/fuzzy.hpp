#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsmb/dataset.hpp"

namespace tsmb::fuzzy {

/// A series sample paired with its first difference.
struct DeltaPoint {
  double z = 0.0;
  double dz = 0.0;

  friend bool operator==(const DeltaPoint&, const DeltaPoint&) = default;
};

/// Fuzzy c-means prototypes in (z, dz) space.
struct CentroidSet {
  std::vector<DeltaPoint> centroids;
  double m = 2.0;  // fuzzification coefficient, > 1

  std::size_t size() const noexcept { return centroids.size(); }
};

/// Throws DataError unless P >= 2, m > 1, all centroids finite and pairwise distinct.
void validate(const CentroidSet& cs);

/// Row-major (rows x P) matrix of memberships; each row sums to one.
struct ActivationSequence {
  std::size_t P = 0;
  std::vector<double> data;

  std::size_t rows() const noexcept { return P == 0 ? 0 : data.size() / P; }
  std::span<const double> row(std::size_t t) const { return {data.data() + t * P, P}; }
};

struct ClusterParams {
  double tol = 1e-5;
  std::size_t max_iter = 300;
};

struct ClusterResult {
  CentroidSet centroids;
  std::size_t iterations = 0;
  /// Objective sum_i sum_j u_ij^m ||p_i - v_j||^2 evaluated after each
  /// membership/centroid update pair.
  std::vector<double> objective_history;
};

/// (z_2, z_2 - z_1), ..., (z_N, z_N - z_{N-1}). Throws DataError if N < 2.
std::vector<DeltaPoint> embed_deltas(std::span<const double> values);
std::vector<DeltaPoint> embed_deltas(const LabeledSeries& s);

/// Alternating fuzzy c-means. Initial centroids are P distinct points drawn
/// without replacement using `seed`. Stops when no centroid moves by `tol`
/// or more, or after max_iter iterations.
/// Throws DataError if there are fewer than P distinct points, m <= 1, P < 2,
/// an update produces a non-finite value, or two centroids coincide.
ClusterResult fcm_cluster(std::span<const DeltaPoint> points, std::size_t P, double m,
                          const ClusterParams& params, std::uint64_t seed);

/// Fuzzy c-means membership of one point to every centroid. A point closer
/// than 1e-12 to one or more centroids gets an indicator vector (split
/// equally among the coincident centroids).
std::vector<double> membership(const DeltaPoint& p, const CentroidSet& cs);

/// Writes membership rows for `n` points given their squared distances to
/// the P centroids (n x P row-major). `out` may alias `sq_dist`.
void memberships_from_sq_dist(const double* sq_dist, std::size_t n, std::size_t P, double m, double* out);

/// One membership row per embedded point: N - 1 rows.
ActivationSequence fuzzify_series(std::span<const double> values, const CentroidSet& cs);
ActivationSequence fuzzify_series(const LabeledSeries& s, const CentroidSet& cs);

/// Objective J_m for a given centroid set over `points`, with memberships
/// recomputed from the centroids.
double objective(std::span<const DeltaPoint> points, const CentroidSet& cs);

}  // namespace tsmb::fuzzy
