#ifndef BCS_POSTERIOR_HPP_
#define BCS_POSTERIOR_HPP_

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace bcs {

// Precision of one ARD term. An inactive term (alpha = infinity) is a distinct
// state rather than a floating-point infinity.
class Precision {
 public:
  static Precision inactive() { return Precision(); }
  static Precision finite(double alpha);

  bool is_active() const { return value_.has_value(); }
  double value() const { return *value_; }

  friend bool operator==(const Precision&, const Precision&) = default;

 private:
  Precision() = default;
  explicit Precision(double v) : value_(v) {}
  std::optional<double> value_;
};

// Hyperparameters of the sparse linear model: the active term set with its
// precisions, the noise variance and the Gamma(a, b) prior on 1/sigma2.
struct HyperState {
  std::vector<Eigen::Index> active;  // basis indices, aligned with alpha
  Eigen::VectorXd alpha;
  double sigma2 = 1.0;
  double a_param = 1.0;
  double b_param = 0.0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(active.size()); }
  // Position of basis index n inside `active`, or -1.
  Eigen::Index position(Eigen::Index n) const;
  Precision precision(Eigen::Index n) const;
  // Throws std::invalid_argument on a broken invariant.
  void validate(Eigen::Index n_total) const;
};

struct PosteriorGaussian {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

struct FactorPair {
  double s_factor = 0.0;
  double q_factor = 0.0;
};

struct EvidenceBreakdown {
  double log_evidence = 0.0;
  double data_fit = 0.0;
  double kl_info = 0.0;
};

enum class GammaPrior { kExclude, kInclude };

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& theta,
                               const std::vector<Eigen::Index>& idx);

// Sigma = (Theta^T Theta / sigma2 + A)^-1 and mu = Sigma Theta^T y / sigma2.
// Picks the direct form when N' <= K and the Woodbury form otherwise.
PosteriorGaussian posterior_moments(const Eigen::MatrixXd& theta_active,
                                    const Eigen::VectorXd& y,
                                    const HyperState& state);
PosteriorGaussian posterior_moments_direct(const Eigen::MatrixXd& theta_active,
                                           const Eigen::VectorXd& y,
                                           const HyperState& state);
// Sigma = A^-1 - A^-1 Theta^T C^-1 Theta A^-1, with C = sigma2 I + Theta A^-1 Theta^T.
PosteriorGaussian posterior_moments_woodbury(const Eigen::MatrixXd& theta_active,
                                             const Eigen::VectorXd& y,
                                             const HyperState& state);

// C^-1 = I/sigma2 - Theta Sigma Theta^T / sigma2^2, reusing Sigma.
Eigen::MatrixXd inverse_c(const Eigen::MatrixXd& theta_active,
                          const HyperState& state, const Eigen::MatrixXd& sigma);

// log p(y | alpha, sigma2); with GammaPrior::kInclude the log Gamma prior on
// 1/sigma2 is added. theta is the full K x N design matrix.
double log_evidence(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                    const HyperState& state,
                    GammaPrior prior = GammaPrior::kExclude);

// Leave-one-out sparsity and quality factors of basis term n.
FactorPair factors(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                   const HyperState& state, Eigen::Index n);

// l(alpha) = 1/2 [log alpha - log(alpha + S) + Q^2 / (alpha + S)]; zero for an
// inactive term. The evidence change of any action is l(new) - l(old).
double per_term_gain(Precision alpha, const FactorPair& f);

// S^2 / (Q^2 - S) when Q^2 > S, inactive otherwise.
Precision optimal_alpha(const FactorPair& f);

// Splits the log evidence into the posterior-averaged log likelihood and the
// KL divergence from prior to posterior.
EvidenceBreakdown evidence_decomposition(const Eigen::MatrixXd& theta,
                                         const Eigen::VectorXd& y,
                                         const HyperState& state);

}  // namespace bcs

#endif  // BCS_POSTERIOR_HPP_
