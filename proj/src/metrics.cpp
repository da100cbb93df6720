#include "bcs/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "bcs/errors.hpp"

namespace bcs {

double reconstruction_error(const Signal& x_hat, const Signal& x) {
  if (x_hat.size() != x.size()) {
    throw std::invalid_argument("reconstruction_error: length mismatch");
  }
  const double ref = x.values.squaredNorm();
  if (ref == 0.0) throw std::invalid_argument("reconstruction_error: zero reference");
  return (x_hat.values - x.values).squaredNorm() / ref;
}

ErrorBars error_bars(const Eigen::MatrixXd& sigma_mat, const Basis& psi,
                     const std::vector<Eigen::Index>& active) {
  const Eigen::Index np = static_cast<Eigen::Index>(active.size());
  if (sigma_mat.rows() != np || sigma_mat.cols() != np) {
    throw std::invalid_argument("error_bars: covariance/active size mismatch");
  }
  ErrorBars out;
  out.per_sample = Eigen::VectorXd::Zero(psi.dim());
  if (np > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_mat);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedState("error_bars: covariance is not positive definite",
                                active);
    }
    if (psi.kind() == BasisKind::kIdentity) {
      for (Eigen::Index j = 0; j < np; ++j)
        out.per_sample[active[j]] = std::sqrt(sigma_mat(j, j));
    } else {
      // diag(B Sigma B^T) with B = the active columns of Psi.
      Eigen::MatrixXd b(psi.dim(), np);
      for (Eigen::Index j = 0; j < np; ++j) b.col(j) = psi.column(active[j]);
      const Eigen::MatrixXd bs = b * sigma_mat;
      out.per_sample =
          (bs.array() * b.array()).rowwise().sum().max(0.0).sqrt().matrix();
    }
  }
  Eigen::Index nonzero = 0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < out.per_sample.size(); ++i) {
    if (out.per_sample[i] > 0.0) {
      ++nonzero;
      sum += out.per_sample[i];
    }
  }
  out.mean_nonzero = nonzero > 0 ? sum / static_cast<double>(nonzero) : 0.0;
  out.mean_all = sum / static_cast<double>(out.per_sample.size());
  return out;
}

double sparsity_ratio(const SparseCoefficients& w_hat, const SparseCoefficients& w_ref,
                      double tau) {
  if (w_hat.size() != w_ref.size()) {
    throw std::invalid_argument("sparsity_ratio: length mismatch");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("sparsity_ratio: tau must be > 0");
  const auto count = [tau](const Eigen::VectorXd& v) {
    return (v.array().abs() < tau).count();
  };
  const auto s_ref = count(w_ref.values);
  if (s_ref == 0) {
    throw std::invalid_argument("sparsity_ratio: reference has no small coefficients");
  }
  return static_cast<double>(count(w_hat.values)) / static_cast<double>(s_ref);
}

double acceptance_rate(std::span<const TrialRecord> records, double threshold) {
  if (records.empty()) throw std::invalid_argument("acceptance_rate: no records");
  std::size_t hits = 0;
  for (const auto& r : records)
    if (r.recon_error < threshold) ++hits;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace bcs
