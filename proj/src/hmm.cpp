#include "tsmb/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "tsmb/error.hpp"
#include "tsmb/kernels.hpp"
#include "tsmb/rng.hpp"

namespace tsmb::hmm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// States whose expected occupancy falls below this keep their emission
// parameters; re-estimating from ~zero mass is meaningless.
constexpr double kMinOccupancy = 1e-8;

Eigen::MatrixXd log_of(const Eigen::MatrixXd& p) {
  return p.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kNegInf; });
}

/// Projects a sample covariance onto the constraint set and applies the
/// floor. For full covariances, eigenvalues are clipped at the floor.
Eigen::MatrixXd constrain(const Eigen::MatrixXd& s, CovarianceType type) {
  const auto d = s.rows();
  switch (type) {
    case CovarianceType::spherical: {
      const double v = std::max(s.trace() / static_cast<double>(d), kCovarianceFloor);
      return Eigen::MatrixXd::Identity(d, d) * v;
    }
    case CovarianceType::diagonal: {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index k = 0; k < d; ++k) out(k, k) = std::max(s(k, k), kCovarianceFloor);
      return out;
    }
    case CovarianceType::full: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
      const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(kCovarianceFloor);
      return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    }
  }
  return s;
}

struct EStep {
  double loglik = 0.0;
  Eigen::VectorXd start_counts;
  Eigen::MatrixXd trans_counts;
  std::vector<Eigen::MatrixXd> gammas;  // per sequence, T x K
};

/// Forward-backward over all sequences. Returns loglik = -inf/NaN on
/// numerical failure and leaves the statistics partially filled.
EStep expectation(const GaussianHmm& model, std::span<const Observations> seqs) {
  const auto& kern = kernels::active();
  const std::size_t K = model.n_states;
  const Eigen::VectorXd log_start = log_of(model.start);
  const Eigen::MatrixXd log_trans = log_of(model.transitions);

  EStep out;
  out.start_counts = Eigen::VectorXd::Zero(K);
  out.trans_counts = Eigen::MatrixXd::Zero(K, K);
  out.gammas.reserve(seqs.size());

  std::vector<double> buf(K);
  for (const auto& obs : seqs) {
    const Eigen::Index T = obs.rows();
    const Eigen::MatrixXd log_b = emission_log_densities(model, obs);
    Eigen::MatrixXd alpha(T, K), beta(T, K);

    for (std::size_t j = 0; j < K; ++j) alpha(0, j) = log_start(j) + log_b(0, j);
    for (Eigen::Index t = 1; t < T; ++t)
      for (std::size_t j = 0; j < K; ++j) {
        for (std::size_t i = 0; i < K; ++i) buf[i] = alpha(t - 1, i) + log_trans(i, j);
        alpha(t, j) = kern.log_sum_exp(buf.data(), K) + log_b(t, j);
      }
    for (std::size_t j = 0; j < K; ++j) buf[j] = alpha(T - 1, j);
    const double ll = kern.log_sum_exp(buf.data(), K);
    out.loglik += ll;
    if (!std::isfinite(ll)) {
      out.loglik = std::isnan(ll) ? ll : kNegInf;
      return out;
    }

    beta.row(T - 1).setZero();
    for (Eigen::Index t = T - 2; t >= 0; --t)
      for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) buf[j] = log_trans(i, j) + log_b(t + 1, j) + beta(t + 1, j);
        beta(t, i) = kern.log_sum_exp(buf.data(), K);
      }

    Eigen::MatrixXd gamma = (alpha + beta).array() - ll;
    gamma = gamma.array().exp();
    out.start_counts += gamma.row(0).transpose();
    for (Eigen::Index t = 0; t + 1 < T; ++t)
      for (std::size_t i = 0; i < K; ++i) {
        if (alpha(t, i) == kNegInf) continue;
        for (std::size_t j = 0; j < K; ++j) {
          const double lx = alpha(t, i) + log_trans(i, j) + log_b(t + 1, j) + beta(t + 1, j) - ll;
          if (lx > kNegInf) out.trans_counts(i, j) += std::exp(lx);
        }
      }
    out.gammas.push_back(std::move(gamma));
  }
  return out;
}

/// M-step. Returns an error message on failure, empty on success.
std::string maximization(GaussianHmm& model, std::span<const Observations> seqs, const EStep& stats) {
  const std::size_t K = model.n_states;
  const auto d = static_cast<Eigen::Index>(model.dim);

  const double start_total = stats.start_counts.sum();
  if (start_total > 0.0) model.start = stats.start_counts / start_total;

  for (std::size_t i = 0; i < K; ++i) {
    const double row_total = stats.trans_counts.row(i).sum();
    if (row_total > 0.0) model.transitions.row(i) = stats.trans_counts.row(i) / row_total;
  }

  for (std::size_t k = 0; k < K; ++k) {
    double occupancy = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const auto& g = stats.gammas[s];
      occupancy += g.col(k).sum();
      sum += seqs[s].transpose() * g.col(k);
    }
    if (!(occupancy >= kMinOccupancy)) continue;
    const Eigen::VectorXd mean = sum / occupancy;

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const Eigen::MatrixXd centered = seqs[s].rowwise() - mean.transpose();
      scatter += centered.transpose() * stats.gammas[s].col(k).asDiagonal() * centered;
    }
    const Eigen::MatrixXd sample = scatter / occupancy;

    if (model.cov_type == CovarianceType::full) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (sample + sample.transpose()),
                                                         Eigen::EigenvaluesOnly);
      const double smallest = eig.eigenvalues().minCoeff();
      if (!(smallest >= kCovarianceFloor)) {
        std::ostringstream msg;
        msg << "covariance collapse: state " << k << " smallest eigenvalue " << smallest << " below floor "
            << kCovarianceFloor;
        return msg.str();
      }
    }
    model.means[k] = mean;
    model.covariances[k] = constrain(sample, model.cov_type);
  }

  if (!model.start.allFinite() || !model.transitions.allFinite()) return "non-finite probabilities";
  for (std::size_t k = 0; k < K; ++k)
    if (!model.means[k].allFinite() || !model.covariances[k].allFinite()) return "non-finite emission parameters";
  return {};
}

FitOutcome failure(std::string reason, std::vector<double> history, std::size_t iterations) {
  FitOutcome out;
  out.failed = true;
  out.reason = std::move(reason);
  out.final_loglik = kNegInf;
  out.iterations = iterations;
  out.loglik_history = std::move(history);
  return out;
}

}  // namespace

std::string to_string(CovarianceType t) {
  switch (t) {
    case CovarianceType::spherical: return "spherical";
    case CovarianceType::diagonal: return "diagonal";
    case CovarianceType::full: return "full";
  }
  return "?";
}

CovarianceType parse_covariance_type(const std::string& s) {
  if (s == "spherical" || s == "sphe") return CovarianceType::spherical;
  if (s == "diagonal" || s == "diag") return CovarianceType::diagonal;
  if (s == "full") return CovarianceType::full;
  throw UsageError("unknown covariance type '" + s + "' (expected spherical, diagonal or full)");
}

void validate(const GaussianHmm& m) {
  const auto K = static_cast<Eigen::Index>(m.n_states);
  const auto d = static_cast<Eigen::Index>(m.dim);
  if (K < 1 || d < 1) throw DataError("HMM needs at least one state and one dimension");
  if (m.start.size() != K || m.transitions.rows() != K || m.transitions.cols() != K ||
      m.means.size() != m.n_states || m.covariances.size() != m.n_states)
    throw DataError("HMM parameter shapes disagree with n_states");
  if (std::abs(m.start.sum() - 1.0) > 1e-9 || (m.start.array() < 0.0).any())
    throw DataError("HMM start distribution is not a probability vector");
  for (Eigen::Index i = 0; i < K; ++i)
    if (std::abs(m.transitions.row(i).sum() - 1.0) > 1e-9 || (m.transitions.row(i).array() < 0.0).any())
      throw DataError("HMM transition row " + std::to_string(i) + " is not a probability vector");
  for (std::size_t k = 0; k < m.n_states; ++k) {
    const auto& c = m.covariances[k];
    if (m.means[k].size() != d || c.rows() != d || c.cols() != d) throw DataError("HMM emission shape mismatch");
    for (Eigen::Index a = 0; a < d; ++a)
      if (!(c(a, a) >= kCovarianceFloor * (1.0 - 1e-9))) throw DataError("HMM variance below floor");
    if (m.cov_type != CovarianceType::full && !c.isDiagonal()) throw DataError("constrained covariance is not diagonal");
    if (m.cov_type == CovarianceType::spherical && (c.diagonal().array() != c(0, 0)).any())
      throw DataError("spherical covariance has unequal variances");
    if (m.cov_type == CovarianceType::full) {
      if (!c.isApprox(c.transpose(), 1e-12)) throw DataError("full covariance is not symmetric");
      if (Eigen::LLT<Eigen::MatrixXd>(c).info() != Eigen::Success)
        throw DataError("full covariance is not positive definite");
    }
  }
}

double log_gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                        CovarianceType type) {
  const auto d = x.size();
  if (mean.size() != d || cov.rows() != d || cov.cols() != d) throw DataError("log_gaussian_pdf: dimension mismatch");
  if (type != CovarianceType::full) {
    double q = 0.0, logdet = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double v = cov(k, k);
      if (!(v > 0.0)) throw DataError("log_gaussian_pdf: non-positive variance");
      const double r = x(k) - mean(k);
      q += r * r / v;
      logdet += std::log(v);
    }
    return -0.5 * (static_cast<double>(d) * kLog2Pi + logdet + q);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw DataError("log_gaussian_pdf: covariance is not positive definite");
  const Eigen::VectorXd y = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(d) * kLog2Pi + logdet + y.squaredNorm());
}

Eigen::MatrixXd emission_log_densities(const GaussianHmm& model, const Observations& obs) {
  const auto T = obs.rows();
  const auto d = static_cast<Eigen::Index>(model.dim);
  if (obs.cols() != d) throw DataError("observation dimension differs from the model's");
  Eigen::MatrixXd out(T, model.n_states);
  std::vector<double> column(static_cast<std::size_t>(T));
  const auto& kern = kernels::active();
  for (std::size_t k = 0; k < model.n_states; ++k) {
    const auto& cov = model.covariances[k];
    if (model.cov_type != CovarianceType::full) {
      Eigen::VectorXd inv_var(d);
      double logdet = 0.0;
      for (Eigen::Index a = 0; a < d; ++a) {
        if (!(cov(a, a) > 0.0)) throw DataError("non-positive variance in state " + std::to_string(k));
        inv_var(a) = 1.0 / cov(a, a);
        logdet += std::log(cov(a, a));
      }
      const double log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet);
      kern.diag_gauss_logpdf(obs.data(), static_cast<std::size_t>(T), static_cast<std::size_t>(d),
                             model.means[k].data(), inv_var.data(), log_norm, column.data());
      out.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(column.data(), T);
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw DataError("covariance of state " + std::to_string(k) + " is not positive definite");
      const Eigen::MatrixXd L = llt.matrixL();
      const double log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + 2.0 * L.diagonal().array().log().sum());
      const Eigen::MatrixXd centered = (obs.rowwise() - model.means[k].transpose()).transpose();
      const Eigen::MatrixXd y = L.triangularView<Eigen::Lower>().solve(centered);
      out.col(static_cast<Eigen::Index>(k)) = (log_norm - 0.5 * y.colwise().squaredNorm().array()).transpose();
    }
  }
  return out;
}

double forward_log_likelihood(const GaussianHmm& model, const Observations& obs) {
  if (obs.rows() == 0) throw DataError("forward_log_likelihood: empty observation sequence");
  const auto& kern = kernels::active();
  const std::size_t K = model.n_states;
  const Eigen::MatrixXd log_b = emission_log_densities(model, obs);
  const Eigen::VectorXd log_start = log_of(model.start);
  const Eigen::MatrixXd log_trans = log_of(model.transitions);

  std::vector<double> alpha(K), next(K), buf(K);
  for (std::size_t j = 0; j < K; ++j) alpha[j] = log_start(j) + log_b(0, j);
  for (Eigen::Index t = 1; t < obs.rows(); ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t i = 0; i < K; ++i) buf[i] = alpha[i] + log_trans(i, j);
      next[j] = kern.log_sum_exp(buf.data(), K) + log_b(t, j);
    }
    alpha.swap(next);
  }
  return kern.log_sum_exp(alpha.data(), K);
}

Observations to_observations(std::span<const double> values, bool with_delta) {
  if (!with_delta) {
    Observations obs(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t t = 0; t < values.size(); ++t) obs(static_cast<Eigen::Index>(t), 0) = values[t];
    return obs;
  }
  if (values.size() < 2) throw DataError("delta observations need at least 2 samples");
  Observations obs(static_cast<Eigen::Index>(values.size() - 1), 2);
  for (std::size_t t = 1; t < values.size(); ++t) {
    obs(static_cast<Eigen::Index>(t - 1), 0) = values[t];
    obs(static_cast<Eigen::Index>(t - 1), 1) = values[t] - values[t - 1];
  }
  return obs;
}

GaussianHmm initial_model(std::span<const Observations> seqs, std::size_t n_states, CovarianceType cov_type,
                          std::uint64_t seed) {
  if (seqs.empty() || n_states == 0) throw DataError("initial_model: no sequences or no states");
  const auto d = seqs.front().cols();
  Eigen::Index total = 0;
  for (const auto& s : seqs) {
    if (s.cols() != d) throw DataError("observation sequences differ in dimension");
    total += s.rows();
  }
  if (total < static_cast<Eigen::Index>(n_states)) throw DataError("fewer observations than states");

  Observations pooled(total, d);
  {
    Eigen::Index row = 0;
    for (const auto& s : seqs) {
      pooled.middleRows(row, s.rows()) = s;
      row += s.rows();
    }
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  GaussianHmm m;
  m.n_states = n_states;
  m.dim = static_cast<std::size_t>(d);
  m.cov_type = cov_type;
  const auto K = static_cast<Eigen::Index>(n_states);
  m.start.resize(K);
  for (Eigen::Index i = 0; i < K; ++i) m.start(i) = 1.0 + 0.5 * jitter(rng);
  m.start /= m.start.sum();
  m.transitions.resize(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = 0; j < K; ++j) m.transitions(i, j) = 1.0 + 0.5 * jitter(rng);
    m.transitions.row(i) /= m.transitions.row(i).sum();
  }

  // Sample rows without replacement, preferring rows not yet used as a mean.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::set<std::vector<double>> used;
  std::vector<Eigen::Index> picks;
  for (Eigen::Index idx : order) {
    if (picks.size() == n_states) break;
    std::vector<double> key(pooled.row(idx).data(), pooled.row(idx).data() + d);
    if (used.insert(std::move(key)).second) picks.push_back(idx);
  }
  for (std::size_t i = 0; picks.size() < n_states; ++i) picks.push_back(order[i]);
  for (Eigen::Index idx : picks) m.means.emplace_back(pooled.row(idx).transpose());

  const Eigen::RowVectorXd mu = pooled.colwise().mean();
  const Eigen::MatrixXd centered = pooled.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(total);
  m.covariances.assign(n_states, constrain(cov, cov_type));
  return m;
}

FitOutcome baum_welch_from(GaussianHmm model, std::span<const Observations> seqs, std::size_t max_iter, double tol) {
  std::vector<double> history;
  if (seqs.empty()) return failure("no observation sequences", history, 0);
  for (const auto& s : seqs)
    if (s.rows() == 0) return failure("empty observation sequence", history, 0);

  std::size_t iterations = 0;
  try {
    EStep stats = expectation(model, seqs);
    history.push_back(stats.loglik);
    if (!std::isfinite(stats.loglik)) return failure("non-finite log-likelihood at initialization", history, 0);

    for (;;) {
      if (iterations >= max_iter) break;
      if (auto err = maximization(model, seqs, stats); !err.empty()) return failure(err, history, iterations + 1);
      ++iterations;
      stats = expectation(model, seqs);
      history.push_back(stats.loglik);
      if (!std::isfinite(stats.loglik))
        return failure("non-finite log-likelihood after iteration " + std::to_string(iterations), history, iterations);
      if (stats.loglik - history[history.size() - 2] < tol) break;
    }
  } catch (const Error& e) {
    return failure(e.what(), history, iterations);
  }

  FitOutcome out;
  out.final_loglik = history.back();
  out.iterations = iterations;
  out.restarts_used = 1;
  out.loglik_history = std::move(history);
  out.model = std::move(model);
  return out;
}

FitOutcome baum_welch(std::span<const Observations> seqs, std::size_t n_states, CovarianceType cov_type,
                      std::size_t max_iter, double tol, std::uint64_t seed) {
  GaussianHmm init;
  try {
    init = initial_model(seqs, n_states, cov_type, seed);
  } catch (const Error& e) {
    return failure(e.what(), {}, 0);
  }
  return baum_welch_from(std::move(init), seqs, max_iter, tol);
}

FitOutcome fit_hmm_restarts(std::span<const Observations> seqs, std::size_t n_states, CovarianceType cov_type,
                            std::size_t n_restarts, std::size_t max_iter, double tol, std::uint64_t seed) {
  if (n_restarts == 0) n_restarts = 1;
  std::optional<FitOutcome> best;
  std::string last_reason;
  for (std::size_t r = 0; r < n_restarts; ++r) {
    FitOutcome attempt = baum_welch(seqs, n_states, cov_type, max_iter, tol, seed + r);
    if (attempt.failed) {
      last_reason = attempt.reason;
      continue;
    }
    if (!best || attempt.final_loglik > best->final_loglik) best = std::move(attempt);
  }
  if (!best) {
    FitOutcome out = failure("all " + std::to_string(n_restarts) + " restarts failed; last: " + last_reason, {}, 0);
    out.restarts_used = n_restarts;
    return out;
  }
  best->restarts_used = n_restarts;
  return std::move(*best);
}

}  // namespace tsmb::hmm
