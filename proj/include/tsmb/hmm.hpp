#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tsmb::hmm {

enum class CovarianceType { spherical, diagonal, full };

std::string to_string(CovarianceType t);
/// Accepts spherical|sphe, diagonal|diag, full. Throws UsageError otherwise.
CovarianceType parse_covariance_type(const std::string& s);

/// Every estimated variance (or covariance eigenvalue) is kept at or above
/// this value.
inline constexpr double kCovarianceFloor = 1e-6;

/// T x d observations, one row per time step.
using Observations = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Hidden Markov model with one Gaussian emission per state.
///
/// Covariances are always stored as d x d matrices; for spherical and
/// diagonal models only the diagonal is populated (and, for spherical, all
/// diagonal entries are equal).
struct GaussianHmm {
  std::size_t n_states = 0;
  std::size_t dim = 1;
  CovarianceType cov_type = CovarianceType::diagonal;
  Eigen::VectorXd start;
  Eigen::MatrixXd transitions;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
};

/// Throws DataError when shapes disagree, a probability vector does not sum
/// to one within 1e-9, or a covariance is invalid for its type.
void validate(const GaussianHmm& model);

/// Log density of a multivariate normal. Spherical and diagonal covariances
/// use the diagonal directly; full covariances go through a Cholesky
/// factorization and raise DataError when not positive definite.
double log_gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                        CovarianceType type);

/// T x n_states matrix of per-state emission log densities.
Eigen::MatrixXd emission_log_densities(const GaussianHmm& model, const Observations& obs);

/// log P(obs | model) via the forward recursion in log space.
/// Throws DataError for an empty sequence or a dimension mismatch.
double forward_log_likelihood(const GaussianHmm& model, const Observations& obs);

/// Observation matrix for a univariate series: T x 1 raw values, or with
/// `with_delta` an (N-1) x 2 matrix of (z_i, z_i - z_{i-1}).
Observations to_observations(std::span<const double> values, bool with_delta);

struct FitOutcome {
  std::optional<GaussianHmm> model;
  bool failed = false;
  std::string reason;
  double final_loglik = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts_used = 0;
  /// Total log-likelihood of each successive parameter set (initial model
  /// first) for the attempt that produced this outcome.
  std::vector<double> loglik_history;
};

/// Seeded starting point: start and transition probabilities are uniform
/// plus seeded jitter, renormalized; means are distinct observations drawn
/// without replacement (falling back to repeats when there are too few
/// distinct rows); covariances are the pooled data covariance under the
/// constraint, floored.
GaussianHmm initial_model(std::span<const Observations> seqs, std::size_t n_states, CovarianceType cov_type,
                          std::uint64_t seed);

/// Baum-Welch EM from a given starting model. Sequences are independent
/// (statistics are summed, never concatenated). Runs until the total
/// log-likelihood improves by less than `tol` or `max_iter` M-steps.
///
/// Never throws on numerical trouble: a non-finite likelihood or parameter,
/// or a full covariance whose smallest eigenvalue collapses below the floor,
/// yields FitOutcome{failed = true}.
FitOutcome baum_welch_from(GaussianHmm init, std::span<const Observations> seqs, std::size_t max_iter, double tol);

/// baum_welch_from(initial_model(seqs, n_states, cov_type, seed), ...).
FitOutcome baum_welch(std::span<const Observations> seqs, std::size_t n_states, CovarianceType cov_type,
                      std::size_t max_iter, double tol, std::uint64_t seed);

/// Runs baum_welch with seeds seed, seed+1, ... and keeps the non-failed
/// outcome with the highest final log-likelihood (earliest wins ties).
/// Fails only when every attempt fails.
FitOutcome fit_hmm_restarts(std::span<const Observations> seqs, std::size_t n_states, CovarianceType cov_type,
                            std::size_t n_restarts, std::size_t max_iter, double tol, std::uint64_t seed);

}  // namespace tsmb::hmm
