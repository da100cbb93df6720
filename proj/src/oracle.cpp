#include "bcs/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace bcs::oracle {
namespace {

constexpr double kTieTol = 1e-12;

struct Search {
  const Eigen::MatrixXd& theta;
  const Eigen::VectorXd& y;
  double scale;
  OracleSolution best;
  bool have_best = false;

  void consider(const std::vector<Eigen::Index>& support) {
    const auto s = static_cast<Eigen::Index>(support.size());
    Eigen::VectorXd coeffs(s);
    double res2 = y.squaredNorm();
    if (s > 0) {
      Eigen::MatrixXd a(theta.rows(), s);
      for (Eigen::Index j = 0; j < s; ++j) a.col(j) = theta.col(support[j]);
      const Eigen::MatrixXd g = a.transpose() * a;
      Eigen::LLT<Eigen::MatrixXd> llt(g);
      if (llt.info() != Eigen::Success) return;
      // Reject numerically rank-deficient submatrices.
      const Eigen::VectorXd d = llt.matrixLLT().diagonal();
      if (d.minCoeff() <= 1e-10 * d.maxCoeff()) return;
      coeffs = llt.solve(a.transpose() * y);
      res2 = (y - a * coeffs).squaredNorm();
    }
    // Supports are enumerated by size, then lexicographically, so a later
    // candidate only wins if it is strictly better beyond the tie tolerance.
    if (!have_best || res2 < best.residual_norm2 - kTieTol * scale) {
      best = {support, coeffs, res2};
      have_best = true;
    }
  }

  void enumerate(std::vector<Eigen::Index>& current, Eigen::Index start, int remaining) {
    if (remaining == 0) {
      consider(current);
      return;
    }
    for (Eigen::Index n = start; n < theta.cols(); ++n) {
      current.push_back(n);
      enumerate(current, n + 1, remaining - 1);
      current.pop_back();
    }
  }
};

}  // namespace

OracleSolution exhaustive_recover(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                                  int max_support) {
  if (theta.cols() > 20) throw std::invalid_argument("exhaustive_recover: N must be <= 20");
  if (max_support < 0 || max_support > 3) {
    throw std::invalid_argument("exhaustive_recover: max_support must be in [0, 3]");
  }
  if (theta.rows() != y.size()) {
    throw std::invalid_argument("exhaustive_recover: dimension mismatch");
  }
  Search search{theta, y, std::max(y.squaredNorm(), 1.0), {}, false};
  std::vector<Eigen::Index> current;
  for (int size = 0; size <= max_support; ++size) search.enumerate(current, 0, size);
  return search.best;
}

double dense_log_evidence(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                          const HyperState& state) {
  const Eigen::Index k = theta.rows();
  if (k > 50) throw std::invalid_argument("dense_log_evidence: K must be <= 50");
  state.validate(theta.cols());
  Eigen::MatrixXd c = state.sigma2 * Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    const Eigen::VectorXd col = theta.col(state.active[j]);
    c += col * col.transpose() / state.alpha[j];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("dense_log_evidence: C is not positive definite");
  }
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const Eigen::VectorXd cinv_y = c.inverse() * y;
  return -0.5 * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) + log_det +
                 y.dot(cinv_y));
}

FactorPair dense_factors(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                         const HyperState& state, Eigen::Index n) {
  const Eigen::Index k = theta.rows();
  Eigen::MatrixXd c = state.sigma2 * Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    if (state.active[j] == n) continue;
    const Eigen::VectorXd col = theta.col(state.active[j]);
    c += col * col.transpose() / state.alpha[j];
  }
  const Eigen::MatrixXd cinv = c.inverse();
  const Eigen::VectorXd t = theta.col(n);
  return {t.dot(cinv * t), t.dot(cinv * y)};
}

double finite_difference(const std::function<double(double)>& f, double x0, double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace bcs::oracle
