#include "bcs/evidence_model.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bcs/errors.hpp"

namespace bcs {
namespace {

// l(alpha) without the Q^2 / (alpha + S) cancellation problem: the re-estimate
// gain is assembled from differences that are formed analytically.
double reestimate_gain(double alpha_old, double alpha_new, double s, double q2) {
  const double log_ratio = std::log(alpha_new / alpha_old);
  const double log_shift = std::log1p((alpha_new - alpha_old) / (alpha_old + s));
  const double quad = q2 * (alpha_old - alpha_new) / ((alpha_new + s) * (alpha_old + s));
  return 0.5 * (log_ratio - log_shift + quad);
}

// y - Theta_a mu accumulated in extended precision; near-interpolating states
// otherwise lose most digits of the residual to cancellation.
Eigen::VectorXd accurate_residual(const Eigen::VectorXd& y, const Eigen::MatrixXd& theta_a,
                                  const Eigen::VectorXd& mu) {
  std::vector<long double> acc(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) acc[i] = y[i];
  for (Eigen::Index j = 0; j < theta_a.cols(); ++j) {
    const long double m = mu[j];
    const double* col = theta_a.col(j).data();
    for (Eigen::Index i = 0; i < y.size(); ++i) acc[i] -= m * col[i];
  }
  Eigen::VectorXd r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) r[i] = static_cast<double>(acc[i]);
  return r;
}

}  // namespace

EvidenceModel::EvidenceModel(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y)
    : theta_(theta),
      y_(y),
      gram_(theta.transpose() * theta),
      theta_y_(theta.transpose() * y),
      y_norm2_(y.squaredNorm()) {}

void EvidenceModel::reset(HyperState state) {
  state.validate(theta_.cols());
  state_ = std::move(state);
  refresh();
}

void EvidenceModel::set_sigma2(double sigma2) {
  state_.sigma2 = sigma2;
  refresh();
}

void EvidenceModel::apply(Eigen::Index n, const Candidate& c) {
  const Eigen::Index j = state_.position(n);
  switch (c.action) {
    case Action::kNone:
      return;
    case Action::kAdd: {
      state_.active.push_back(n);
      state_.alpha.conservativeResize(state_.alpha.size() + 1);
      state_.alpha[state_.alpha.size() - 1] = c.alpha_new;
      break;
    }
    case Action::kReestimate:
      state_.alpha[j] = c.alpha_new;
      break;
    case Action::kDelete: {
      const Eigen::Index last = state_.size() - 1;
      state_.active.erase(state_.active.begin() + j);
      for (Eigen::Index i = j; i < last; ++i) state_.alpha[i] = state_.alpha[i + 1];
      state_.alpha.conservativeResize(last);
      break;
    }
  }
  refresh();
}

void EvidenceModel::refresh() {
  const Eigen::Index k = theta_.rows();
  const double s2 = state_.sigma2;
  factors_fresh_ = false;
  theta_a_.resize(k, state_.size());
  for (Eigen::Index j = 0; j < state_.size(); ++j)
    theta_a_.col(j) = theta_.col(state_.active[j]);
  woodbury_ = state_.size() > k;
  if (state_.size() == 0) {
    post_ = {};
    residual_ = y_;
    log_det_c_ = static_cast<double>(k) * std::log(s2);
    y_cinv_y_ = y_norm2_ / s2;
    return;
  }
  if (woodbury_) {
    refresh_woodbury();
  } else {
    refresh_direct();
  }
  for (Eigen::Index j = 0; j < state_.size(); ++j) {
    const Eigen::Index n = state_.active[j];
    const double snn = post_.sigma(j, j);
    if (!(snn > 0.0) || !std::isfinite(snn)) {
      throw NumericalDegeneracy(
          "non-positive posterior variance for active term " + std::to_string(n), n);
    }
    if (!(1.0 - state_.alpha[j] * snn > 0.0)) {
      throw NumericalDegeneracy(
          "non-positive sparsity factor for active term " + std::to_string(n), n);
    }
  }
}

void EvidenceModel::refresh_direct() {
  const Eigen::Index k = theta_.rows();
  const Eigen::Index np = state_.size();
  const double s2 = state_.sigma2;

  Eigen::MatrixXd m(np, np);
  for (Eigen::Index j = 0; j < np; ++j)
    for (Eigen::Index i = 0; i < np; ++i) m(i, j) = gram_(state_.active[i], state_.active[j]);
  m.diagonal() += s2 * state_.alpha;
  llt_.compute(m);
  if (llt_.info() != Eigen::Success) {
    throw IllConditionedState("Theta^T Theta + sigma2 A is not positive definite",
                              state_.active);
  }
  Eigen::VectorXd ty_a(np);
  for (Eigen::Index j = 0; j < np; ++j) ty_a[j] = theta_y_[state_.active[j]];
  post_.mu = llt_.solve(ty_a);
  post_.sigma = s2 * llt_.solve(Eigen::MatrixXd::Identity(np, np));
  post_.sigma = 0.5 * (post_.sigma + post_.sigma.transpose()).eval();
  residual_ = accurate_residual(y_, theta_a_, post_.mu);

  const double log_det_m = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  log_det_c_ = -state_.alpha.array().log().sum() +
               static_cast<double>(k - np) * std::log(s2) + log_det_m;
  y_cinv_y_ = residual_.squaredNorm() / s2 +
              (state_.alpha.array() * post_.mu.array().square()).sum();
}

void EvidenceModel::refresh_woodbury() {
  const double s2 = state_.sigma2;

  const Eigen::VectorXd inv_alpha = state_.alpha.cwiseInverse();
  Eigen::MatrixXd c = theta_a_ * inv_alpha.asDiagonal() * theta_a_.transpose();
  c.diagonal().array() += s2;
  llt_.compute(c);
  if (llt_.info() != Eigen::Success) {
    throw IllConditionedState("C is not positive definite", state_.active);
  }
  Eigen::MatrixXd w = theta_a_ * inv_alpha.asDiagonal();  // L^-1 Theta_a A^-1
  llt_.matrixL().solveInPlace(w);
  Eigen::VectorXd ly = y_;
  llt_.matrixL().solveInPlace(ly);

  post_.sigma = -(w.transpose() * w);
  post_.sigma.diagonal() += inv_alpha;
  post_.sigma = 0.5 * (post_.sigma + post_.sigma.transpose()).eval();
  post_.mu = w.transpose() * ly;
  residual_ = accurate_residual(y_, theta_a_, post_.mu);
  log_det_c_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  y_cinv_y_ = ly.squaredNorm();
}

// Active terms: S~ = alpha - alpha^2 Sigma_nn and Q~ = alpha mu_n, so the
// leave-one-out conversion reduces to S = 1/Sigma_nn - alpha, Q = mu/Sigma_nn.
FactorPair EvidenceModel::active_factor(Eigen::Index j) const {
  const double snn = post_.sigma(j, j);
  return {(1.0 - state_.alpha[j] * snn) / snn, post_.mu[j] / snn};
}

FactorPair EvidenceModel::inactive_factor(Eigen::Index n) const {
  const double s2 = state_.sigma2;
  if (state_.size() == 0) return {gram_(n, n) / s2, theta_y_[n] / s2};
  const double q = theta_.col(n).dot(residual_) / s2;
  if (woodbury_) {
    Eigen::VectorXd u = theta_.col(n);
    llt_.matrixL().solveInPlace(u);
    return {u.squaredNorm(), q};
  }
  // sigma2 S_n = |Theta_n - Theta_a c_n|^2 + sigma2 c_n^T A c_n with
  // c_n = M^-1 Theta_a^T Theta_n; both terms are non-negative.
  Eigen::VectorXd g(state_.size());
  for (Eigen::Index j = 0; j < state_.size(); ++j) g[j] = gram_(state_.active[j], n);
  const Eigen::VectorXd c = llt_.solve(g);
  const double fit = (theta_.col(n) - theta_a_ * c).squaredNorm();
  const double prior = (state_.alpha.array() * c.array().square()).sum();
  return {(fit + s2 * prior) / s2, q};
}

void EvidenceModel::refresh_factors() const {
  if (factors_fresh_) return;
  const Eigen::Index np = state_.size();
  const double s2 = state_.sigma2;
  if (np == 0) {
    s_ = gram_.diagonal() / s2;
    q_ = theta_y_ / s2;
  } else if (woodbury_) {
    Eigen::MatrixXd u = theta_;  // L^-1 Theta
    llt_.matrixL().solveInPlace(u);
    s_ = u.colwise().squaredNorm().transpose();
    q_ = theta_.transpose() * residual_ / s2;  // C^-1 y = r / sigma2
  } else {
    Eigen::MatrixXd g_a(np, theta_.cols());  // Theta_a^T Theta
    for (Eigen::Index j = 0; j < np; ++j) g_a.row(j) = gram_.row(state_.active[j]);
    const Eigen::MatrixXd c = llt_.solve(g_a);
    const Eigen::MatrixXd z = theta_ - theta_a_ * c;
    s_ = (z.colwise().squaredNorm().transpose() +
          s2 * (c.array().square().colwise() * state_.alpha.array())
                   .colwise()
                   .sum()
                   .transpose()
                   .matrix()) /
         s2;
    q_ = theta_.transpose() * residual_ / s2;
  }
  for (Eigen::Index j = 0; j < np; ++j) {
    const FactorPair f = active_factor(j);
    s_[state_.active[j]] = f.s_factor;
    q_[state_.active[j]] = f.q_factor;
  }
  factors_fresh_ = true;
}

FactorPair EvidenceModel::factor(Eigen::Index n) const {
  if (factors_fresh_) return {s_[n], q_[n]};
  const Eigen::Index j = state_.position(n);
  return j >= 0 ? active_factor(j) : inactive_factor(n);
}

Candidate EvidenceModel::candidate(Eigen::Index n) const {
  const FactorPair f = factor(n);
  const double s = f.s_factor;
  const double q2 = f.q_factor * f.q_factor;
  const Eigen::Index j = state_.position(n);
  Candidate c;
  if (j < 0) {
    if (q2 > s) {
      const double x = (q2 - s) / s;
      c.action = Action::kAdd;
      c.alpha_new = s * s / (q2 - s);
      c.gain = 0.5 * (x - std::log1p(x));
    }
    return c;
  }
  const double alpha = state_.alpha[j];
  if (q2 > s) {
    c.action = Action::kReestimate;
    c.alpha_new = s * s / (q2 - s);
    c.gain = reestimate_gain(alpha, c.alpha_new, s, q2);
    c.log_alpha_change = std::abs(std::log(c.alpha_new / alpha));
  } else {
    c.action = Action::kDelete;
    c.gain = 0.5 * (std::log1p(s / alpha) - q2 / (alpha + s));
  }
  return c;
}

std::vector<Candidate> EvidenceModel::candidates() const {
  refresh_factors();
  std::vector<Candidate> out(static_cast<std::size_t>(theta_.cols()));
  for (Eigen::Index n = 0; n < theta_.cols(); ++n) out[n] = candidate(n);
  return out;
}

double EvidenceModel::log_evidence(GammaPrior prior) const {
  const double k = static_cast<double>(theta_.rows());
  double l = -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det_c_ + y_cinv_y_);
  if (prior == GammaPrior::kInclude) {
    const double a = state_.a_param;
    const double b = state_.b_param;
    const double inv_s2 = 1.0 / state_.sigma2;
    if (b > 0.0) l += a * std::log(b) - std::lgamma(a);
    l += (a - 1.0) * std::log(inv_s2) - b * inv_s2;
  }
  return l;
}

double EvidenceModel::gamma_sum() const {
  double g = 0.0;
  for (Eigen::Index j = 0; j < state_.size(); ++j)
    g += 1.0 - state_.alpha[j] * post_.sigma(j, j);
  return g;
}

}  // namespace bcs
