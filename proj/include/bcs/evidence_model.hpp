#ifndef BCS_EVIDENCE_MODEL_HPP_
#define BCS_EVIDENCE_MODEL_HPP_

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bcs/posterior.hpp"

namespace bcs {

enum class Action { kNone, kAdd, kReestimate, kDelete };

// The evidence-maximizing move available to one basis term.
struct Candidate {
  Action action = Action::kNone;
  double alpha_new = 0.0;  // meaningful for kAdd / kReestimate
  double gain = 0.0;       // Delta log evidence, >= 0 up to rounding
  double log_alpha_change = 0.0;  // |log alpha_new - log alpha_old| for kReestimate
};

// Live posterior and leave-one-out factors of every basis term for a fixed
// design matrix and data vector. Each mutation refreshes all derived
// quantities, so queries always reflect the current HyperState.
//
// theta and y are held by reference and must outlive the model.
class EvidenceModel {
 public:
  EvidenceModel(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y);

  void reset(HyperState state);
  void set_sigma2(double sigma2);
  void set_b_param(double b) { state_.b_param = b; }
  void apply(Eigen::Index n, const Candidate& c);

  const HyperState& state() const { return state_; }
  const PosteriorGaussian& posterior() const { return post_; }
  const Eigen::VectorXd& residual() const { return residual_; }
  const Eigen::MatrixXd& theta() const { return theta_; }
  const Eigen::VectorXd& y() const { return y_; }
  Eigen::Index num_terms() const { return theta_.cols(); }
  Eigen::Index num_measurements() const { return theta_.rows(); }

  FactorPair factor(Eigen::Index n) const;
  Candidate candidate(Eigen::Index n) const;
  std::vector<Candidate> candidates() const;

  double log_evidence(GammaPrior prior = GammaPrior::kExclude) const;
  // sum over active terms of (1 - alpha_n Sigma_nn).
  double gamma_sum() const;

 private:
  // Posterior moments are refreshed eagerly after every change; the S/Q
  // factors of all terms only when a full scan asks for them.
  void refresh();
  void refresh_direct();
  void refresh_woodbury();
  void refresh_factors() const;
  FactorPair inactive_factor(Eigen::Index n) const;
  FactorPair active_factor(Eigen::Index j) const;

  const Eigen::MatrixXd& theta_;
  const Eigen::VectorXd& y_;
  Eigen::MatrixXd gram_;  // Theta^T Theta
  Eigen::VectorXd theta_y_;
  double y_norm2_;

  HyperState state_;
  PosteriorGaussian post_;
  Eigen::VectorXd residual_;
  Eigen::MatrixXd theta_a_;
  Eigen::LLT<Eigen::MatrixXd> llt_;  // of M (direct) or C (Woodbury)
  bool woodbury_ = false;
  mutable Eigen::VectorXd s_;
  mutable Eigen::VectorXd q_;
  mutable bool factors_fresh_ = false;
  double log_det_c_ = 0.0;
  double y_cinv_y_ = 0.0;
};

}  // namespace bcs

#endif  // BCS_EVIDENCE_MODEL_HPP_
