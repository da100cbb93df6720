#ifndef BCS_METRICS_HPP_
#define BCS_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bcs/signalgen.hpp"

namespace bcs {

inline constexpr double kDefaultSparsityTau = 1e-4;
inline constexpr double kDefaultThresholds[] = {0.01, 0.1, 0.5};

// One reconstruction trial, as written to a sweep CSV row.
struct TrialRecord {
  std::string algorithm;
  Eigen::Index k_meas = 0;
  Eigen::Index n_len = 0;
  double noise_pct = 0.0;
  std::uint64_t seed = 0;
  double recon_error = 0.0;
  double mean_error_bar = 0.0;
  double sparsity_ratio = 0.0;
  Eigen::Index model_size = 0;
  double log_evidence = 0.0;
  long inner_iters = 0;
  int outer_iters = 0;
  bool converged = false;
  double wall_time_s = 0.0;
};

// |x_hat - x|^2 / |x|^2.
double reconstruction_error(const Signal& x_hat, const Signal& x);

struct ErrorBars {
  Eigen::VectorXd per_sample;  // sqrt diag(Psi Sigma Psi^T)
  double mean_nonzero = 0.0;   // mean over samples with nonzero std
  double mean_all = 0.0;
};

// sigma_mat is the posterior covariance over the coefficients listed in
// `active`; it is embedded into the full N x N coefficient covariance.
ErrorBars error_bars(const Eigen::MatrixXd& sigma_mat, const Basis& psi,
                     const std::vector<Eigen::Index>& active);

// #{|w_hat_i| < tau} / #{|w_ref_i| < tau}.
double sparsity_ratio(const SparseCoefficients& w_hat, const SparseCoefficients& w_ref,
                      double tau = kDefaultSparsityTau);

// Fraction of records with recon_error below threshold.
double acceptance_rate(std::span<const TrialRecord> records, double threshold);

}  // namespace bcs

#endif  // BCS_METRICS_HPP_
