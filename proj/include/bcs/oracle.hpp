#ifndef BCS_ORACLE_HPP_
#define BCS_ORACLE_HPP_

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "bcs/posterior.hpp"

namespace bcs::oracle {

struct OracleSolution {
  std::vector<Eigen::Index> support;  // ascending
  Eigen::VectorXd coeffs;             // aligned with support
  double residual_norm2 = 0.0;
};

// Brute-force search over every support of size 0..max_support with least
// squares on each. Requires N <= 20 and max_support <= 3.
OracleSolution exhaustive_recover(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                                  int max_support);

// Log evidence from an explicitly assembled C = sigma2 I + Theta_a A^-1 Theta_a^T.
// Requires K <= 50.
double dense_log_evidence(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                          const HyperState& state);

// S_n and Q_n from an explicitly assembled and inverted C_{-n}.
FactorPair dense_factors(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                         const HyperState& state, Eigen::Index n);

// Central difference (f(x0 + h) - f(x0 - h)) / 2h.
double finite_difference(const std::function<double(double)>& f, double x0, double h);

}  // namespace bcs::oracle

#endif  // BCS_ORACLE_HPP_
