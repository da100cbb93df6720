#include "bcs/signalgen.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcs/random.hpp"

namespace bcs {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

Basis::Basis(BasisKind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {
  if (dim < 1) throw std::invalid_argument("basis dimension must be >= 1");
  if (kind == BasisKind::kHaar && !is_power_of_two(dim)) {
    throw std::invalid_argument("haar basis requires a power-of-two length, got " +
                                std::to_string(dim));
  }
}

// Haar analysis: at each level the leading `len` entries are replaced by
// [scaled pairwise sums | scaled pairwise differences]. Index 0 ends up as the
// coarsest scaling coefficient.
Eigen::VectorXd Basis::analyze(const Eigen::VectorXd& v) const {
  if (v.size() != dim_) throw std::invalid_argument("basis: length mismatch");
  if (kind_ == BasisKind::kIdentity) return v;
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd out = v;
  Eigen::VectorXd tmp(dim_);
  for (Eigen::Index len = dim_; len > 1; len /= 2) {
    const Eigen::Index half = len / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
      tmp[i] = s * (out[2 * i] + out[2 * i + 1]);
      tmp[half + i] = s * (out[2 * i] - out[2 * i + 1]);
    }
    out.head(len) = tmp.head(len);
  }
  return out;
}

Eigen::VectorXd Basis::synthesize(const Eigen::VectorXd& v) const {
  if (v.size() != dim_) throw std::invalid_argument("basis: length mismatch");
  if (kind_ == BasisKind::kIdentity) return v;
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd out = v;
  Eigen::VectorXd tmp(dim_);
  for (Eigen::Index len = 2; len <= dim_; len *= 2) {
    const Eigen::Index half = len / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
      tmp[2 * i] = s * (out[i] + out[half + i]);
      tmp[2 * i + 1] = s * (out[i] - out[half + i]);
    }
    out.head(len) = tmp.head(len);
  }
  return out;
}

Eigen::VectorXd Basis::column(Eigen::Index n) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim_);
  e[n] = 1.0;
  return synthesize(e);
}

Eigen::MatrixXd Basis::dense() const {
  Eigen::MatrixXd m(dim_, dim_);
  for (Eigen::Index n = 0; n < dim_; ++n) m.col(n) = column(n);
  return m;
}

Signal gen_spikes(Eigen::Index n_len, Eigen::Index n_spikes, SpikeKind kind,
                  std::uint64_t seed) {
  if (n_len < 1) throw std::invalid_argument("gen_spikes: n_len must be >= 1");
  if (n_spikes < 0 || n_spikes > n_len) {
    throw std::invalid_argument("gen_spikes: n_spikes must lie in [0, n_len]");
  }
  Rng rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_len));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first n_spikes slots are a uniform sample
  // without replacement.
  for (Eigen::Index i = 0; i < n_spikes; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n_len - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Signal x{Eigen::VectorXd::Zero(n_len)};
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < n_spikes; ++i) {
    double amp = 0.0;
    if (kind == SpikeKind::kUniform) {
      amp = coin(rng) ? 1.0 : -1.0;
    } else {
      do {
        amp = normal(rng);
      } while (amp == 0.0);
    }
    x.values[idx[i]] = amp;
  }
  return x;
}

ProjectionMatrix gen_projection(Eigen::Index k, Eigen::Index n_len,
                                std::uint64_t seed) {
  if (k < 1 || n_len < 1) {
    throw std::invalid_argument("gen_projection: dimensions must be >= 1");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProjectionMatrix phi{Eigen::MatrixXd(k, n_len), seed};
  // Row-major fill order so a given seed means the same matrix regardless of
  // storage layout.
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < n_len; ++j) phi.entries(i, j) = normal(rng);
  return phi;
}

double rms(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

Measurements compress(const ProjectionMatrix& phi, const Signal& x,
                      double noise_pct, std::uint64_t seed) {
  if (phi.cols() != x.size()) {
    throw std::invalid_argument("compress: projection has " +
                                std::to_string(phi.cols()) +
                                " columns but signal length is " +
                                std::to_string(x.size()));
  }
  if (!(noise_pct >= 0.0)) throw std::invalid_argument("compress: noise_pct < 0");
  Measurements y{phi.entries * x.values, noise_pct, seed};
  if (noise_pct > 0.0) {
    const double std_dev = noise_pct * rms(y.values);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < y.values.size(); ++i)
      y.values[i] += std_dev * normal(rng);
  }
  return y;
}

SparseCoefficients basis_forward(const Basis& psi, const Signal& x) {
  return {psi.analyze(x.values), psi.kind()};
}

Signal basis_inverse(const Basis& psi, const SparseCoefficients& w) {
  return {psi.synthesize(w.values)};
}

ThresholdResult hard_threshold(const SparseCoefficients& w, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("hard_threshold: tau must be > 0");
  ThresholdResult out{w, 0};
  for (Eigen::Index i = 0; i < out.coeffs.values.size(); ++i) {
    if (std::abs(out.coeffs.values[i]) < tau) {
      out.coeffs.values[i] = 0.0;
    } else {
      ++out.nonzeros;
    }
  }
  return out;
}

Eigen::MatrixXd design_matrix(const ProjectionMatrix& phi, const Basis& psi) {
  if (phi.cols() != psi.dim()) {
    throw std::invalid_argument("design_matrix: projection/basis size mismatch");
  }
  if (psi.kind() == BasisKind::kIdentity) return phi.entries;
  // Row i of Phi Psi is (Psi^T phi_i)^T.
  Eigen::MatrixXd theta(phi.rows(), phi.cols());
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    theta.row(i) = psi.analyze(phi.entries.row(i).transpose()).transpose();
  }
  return theta;
}

}  // namespace bcs
