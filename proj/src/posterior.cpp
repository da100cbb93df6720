#include "bcs/posterior.hpp"

#include "bcs/evidence_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "bcs/errors.hpp"

namespace bcs {
namespace {

// Posterior together with the pieces of the evidence that fall out of the
// same factorization.
struct Factorized {
  PosteriorGaussian post;
  Eigen::VectorXd residual;  // y - Theta mu
  double log_det_c = 0.0;
  double y_cinv_y = 0.0;
};

Factorized factorize(const Eigen::MatrixXd& theta_active, const Eigen::VectorXd& y,
                     const HyperState& state) {
  const Eigen::Index k = theta_active.rows();
  const Eigen::Index np = theta_active.cols();
  const double s2 = state.sigma2;
  Factorized f;
  if (np == 0) {
    f.residual = y;
    f.log_det_c = static_cast<double>(k) * std::log(s2);
    f.y_cinv_y = y.squaredNorm() / s2;
    return f;
  }
  if (np <= k) {
    f.post = posterior_moments_direct(theta_active, y, state);
    Eigen::LLT<Eigen::MatrixXd> llt(f.post.sigma);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedState("posterior covariance is not positive definite",
                                state.active);
    }
    const double log_det_sigma =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    f.residual = y - theta_active * f.post.mu;
    // log|C| = -log|A| + K log sigma2 - log|Sigma|
    f.log_det_c = -state.alpha.array().log().sum() +
                  static_cast<double>(k) * std::log(s2) - log_det_sigma;
    // y^T C^-1 y = |y - Theta mu|^2 / sigma2 + mu^T A mu
    f.y_cinv_y = f.residual.squaredNorm() / s2 +
                 (state.alpha.array() * f.post.mu.array().square()).sum();
    return f;
  }
  Eigen::MatrixXd c = theta_active * state.alpha.cwiseInverse().asDiagonal() *
                      theta_active.transpose();
  c.diagonal().array() += s2;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedState("C is not positive definite", state.active);
  }
  f.post = posterior_moments_woodbury(theta_active, y, state);
  f.residual = y - theta_active * f.post.mu;
  f.log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  f.y_cinv_y = y.dot(llt.solve(y));
  return f;
}

}  // namespace

Precision Precision::finite(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("precision must be finite and positive");
  }
  return Precision(alpha);
}

Eigen::Index HyperState::position(Eigen::Index n) const {
  for (std::size_t j = 0; j < active.size(); ++j)
    if (active[j] == n) return static_cast<Eigen::Index>(j);
  return -1;
}

Precision HyperState::precision(Eigen::Index n) const {
  const Eigen::Index j = position(n);
  return j < 0 ? Precision::inactive() : Precision::finite(alpha[j]);
}

void HyperState::validate(Eigen::Index n_total) const {
  if (alpha.size() != size()) {
    throw std::invalid_argument("HyperState: alpha/active size mismatch");
  }
  if (size() > n_total) throw std::invalid_argument("HyperState: N' > N");
  std::vector<bool> seen(static_cast<std::size_t>(n_total), false);
  for (Eigen::Index j = 0; j < size(); ++j) {
    const Eigen::Index n = active[j];
    if (n < 0 || n >= n_total) {
      throw std::invalid_argument("HyperState: index out of range");
    }
    if (seen[n]) throw std::invalid_argument("HyperState: duplicate index");
    seen[n] = true;
    if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j])) {
      throw std::invalid_argument("HyperState: alpha must be finite and positive");
    }
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("HyperState: sigma2 must be finite and positive");
  }
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& theta,
                               const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(theta.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = theta.col(idx[j]);
  return out;
}

PosteriorGaussian posterior_moments(const Eigen::MatrixXd& theta_active,
                                    const Eigen::VectorXd& y,
                                    const HyperState& state) {
  if (theta_active.cols() > theta_active.rows()) {
    return posterior_moments_woodbury(theta_active, y, state);
  }
  return posterior_moments_direct(theta_active, y, state);
}

PosteriorGaussian posterior_moments_direct(const Eigen::MatrixXd& theta_active,
                                           const Eigen::VectorXd& y,
                                           const HyperState& state) {
  const Eigen::Index np = theta_active.cols();
  if (state.alpha.size() != np) {
    throw std::invalid_argument("posterior_moments: alpha/theta size mismatch");
  }
  PosteriorGaussian post;
  if (np == 0) return post;
  // Sigma = sigma2 (Theta^T Theta + sigma2 A)^-1 keeps the factorized matrix
  // well scaled as sigma2 -> 0.
  Eigen::MatrixXd m = theta_active.transpose() * theta_active;
  m.diagonal() += state.sigma2 * state.alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedState("Theta^T Theta + sigma2 A is not positive definite",
                              state.active);
  }
  post.mu = llt.solve(theta_active.transpose() * y);
  post.sigma = state.sigma2 * llt.solve(Eigen::MatrixXd::Identity(np, np));
  post.sigma = 0.5 * (post.sigma + post.sigma.transpose()).eval();
  return post;
}

PosteriorGaussian posterior_moments_woodbury(const Eigen::MatrixXd& theta_active,
                                             const Eigen::VectorXd& y,
                                             const HyperState& state) {
  const Eigen::Index np = theta_active.cols();
  if (state.alpha.size() != np) {
    throw std::invalid_argument("posterior_moments: alpha/theta size mismatch");
  }
  PosteriorGaussian post;
  if (np == 0) return post;
  const Eigen::VectorXd inv_alpha = state.alpha.cwiseInverse();
  Eigen::MatrixXd c =
      theta_active * inv_alpha.asDiagonal() * theta_active.transpose();
  c.diagonal().array() += state.sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedState("C is not positive definite", state.active);
  }
  // W = L^-1 Theta A^-1, so A^-1 Theta^T C^-1 Theta A^-1 = W^T W.
  Eigen::MatrixXd w = theta_active * inv_alpha.asDiagonal();
  llt.matrixL().solveInPlace(w);
  Eigen::VectorXd ly = y;
  llt.matrixL().solveInPlace(ly);
  post.sigma = -(w.transpose() * w);
  post.sigma.diagonal() += inv_alpha;
  post.sigma = 0.5 * (post.sigma + post.sigma.transpose()).eval();
  post.mu = w.transpose() * ly;
  return post;
}

Eigen::MatrixXd inverse_c(const Eigen::MatrixXd& theta_active,
                          const HyperState& state, const Eigen::MatrixXd& sigma) {
  const double inv_s2 = 1.0 / state.sigma2;
  Eigen::MatrixXd out = -(inv_s2 * inv_s2) * theta_active * sigma *
                        theta_active.transpose();
  out.diagonal().array() += inv_s2;
  return out;
}

double log_evidence(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                    const HyperState& state, GammaPrior prior) {
  state.validate(theta.cols());
  const Factorized f = factorize(select_columns(theta, state.active), y, state);
  const double k = static_cast<double>(theta.rows());
  double l = -0.5 * (k * std::log(2.0 * std::numbers::pi) + f.log_det_c + f.y_cinv_y);
  if (prior == GammaPrior::kInclude) {
    const double a = state.a_param;
    const double b = state.b_param;
    const double inv_s2 = 1.0 / state.sigma2;
    // With b = 0 the Gamma prior is improper and its normalizer is dropped.
    if (b > 0.0) l += a * std::log(b) - std::lgamma(a);
    l += (a - 1.0) * std::log(inv_s2) - b * inv_s2;
  }
  return l;
}

FactorPair factors(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                   const HyperState& state, Eigen::Index n) {
  state.validate(theta.cols());
  if (n < 0 || n >= theta.cols()) throw std::out_of_range("factors: bad index");
  EvidenceModel model(theta, y);
  model.reset(state);
  const Eigen::Index j = state.position(n);
  if (j >= 0) {
    // Full-C quantities of an active term: S~ = alpha - alpha^2 Sigma_nn and
    // Q~ = alpha mu_n, so alpha - S~ = alpha^2 Sigma_nn.
    const double alpha = state.alpha[j];
    const double gap = alpha * alpha * model.posterior().sigma(j, j);
    if (!(gap >= 1e-12 * alpha)) {
      throw NumericalDegeneracy(
          "alpha_n - S~_n is not positive for active term " + std::to_string(n), n);
    }
  }
  return model.factor(n);
}

double per_term_gain(Precision alpha, const FactorPair& f) {
  if (!alpha.is_active()) return 0.0;
  const double a = alpha.value();
  const double s = f.s_factor;
  return 0.5 * (-std::log1p(s / a) + f.q_factor * f.q_factor / (a + s));
}

Precision optimal_alpha(const FactorPair& f) {
  const double q2 = f.q_factor * f.q_factor;
  if (q2 <= f.s_factor) return Precision::inactive();
  const double alpha = f.s_factor * f.s_factor / (q2 - f.s_factor);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) return Precision::inactive();
  return Precision::finite(alpha);
}

EvidenceBreakdown evidence_decomposition(const Eigen::MatrixXd& theta,
                                         const Eigen::VectorXd& y,
                                         const HyperState& state) {
  state.validate(theta.cols());
  const Eigen::MatrixXd theta_a = select_columns(theta, state.active);
  const PosteriorGaussian post = posterior_moments(theta_a, y, state);
  const double k = static_cast<double>(theta.rows());
  const double s2 = state.sigma2;
  const Eigen::VectorXd r = y - theta_a * post.mu;

  EvidenceBreakdown out;
  out.log_evidence = log_evidence(theta, y, state);
  double trace_term = 0.0;
  double kl = 0.0;
  if (state.size() > 0) {
    trace_term = (post.sigma * (theta_a.transpose() * theta_a)).trace();
    Eigen::LLT<Eigen::MatrixXd> llt(post.sigma);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedState("posterior covariance is not positive definite",
                                state.active);
    }
    const double log_det_sigma =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double np = static_cast<double>(state.size());
    // KL(N(mu, Sigma) || N(0, A^-1))
    kl = 0.5 * ((state.alpha.array() * post.sigma.diagonal().array()).sum() +
                (state.alpha.array() * post.mu.array().square()).sum() - np -
                state.alpha.array().log().sum() - log_det_sigma);
  }
  out.data_fit = -0.5 * k * std::log(2.0 * std::numbers::pi * s2) -
                 0.5 * (r.squaredNorm() + trace_term) / s2;
  out.kl_info = kl;
  return out;
}

}  // namespace bcs
