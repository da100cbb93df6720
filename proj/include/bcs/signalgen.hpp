#ifndef BCS_SIGNALGEN_HPP_
#define BCS_SIGNALGEN_HPP_

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

namespace bcs {

enum class SpikeKind { kUniform, kGaussian };
enum class BasisKind { kIdentity, kHaar };

// A length-N real time series (or any vector living in sample space).
struct Signal {
  Eigen::VectorXd values;
  Eigen::Index size() const { return values.size(); }
};

// Coefficients w of a signal in an orthonormal basis, x = Psi w.
struct SparseCoefficients {
  Eigen::VectorXd values;
  BasisKind basis = BasisKind::kIdentity;
  Eigen::Index size() const { return values.size(); }
};

struct ProjectionMatrix {
  Eigen::MatrixXd entries;  // K x N
  std::uint64_t seed = 0;
  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

struct Measurements {
  Eigen::VectorXd values;  // length K
  double noise_pct = 0.0;
  std::uint64_t seed = 0;
};

// Orthonormal N x N basis Psi. The Haar (dB1) basis is applied through the
// fast multi-level transform; dense() materializes it for verification only.
class Basis {
 public:
  Basis(BasisKind kind, Eigen::Index dim);

  static Basis identity(Eigen::Index dim) { return {BasisKind::kIdentity, dim}; }
  static Basis haar(Eigen::Index dim) { return {BasisKind::kHaar, dim}; }

  BasisKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  // Psi^T v.
  Eigen::VectorXd analyze(const Eigen::VectorXd& v) const;
  // Psi v.
  Eigen::VectorXd synthesize(const Eigen::VectorXd& v) const;
  // Column n of Psi.
  Eigen::VectorXd column(Eigen::Index n) const;
  Eigen::MatrixXd dense() const;

 private:
  BasisKind kind_;
  Eigen::Index dim_;
};

bool is_power_of_two(Eigen::Index n);

// Exactly n_spikes nonzeros at distinct uniformly chosen positions; amplitudes
// are +-1 (uniform kind) or standard normal (gaussian kind).
Signal gen_spikes(Eigen::Index n_len, Eigen::Index n_spikes, SpikeKind kind,
                  std::uint64_t seed);

// K x N matrix of independent N(0, 1) draws.
ProjectionMatrix gen_projection(Eigen::Index k, Eigen::Index n_len,
                                std::uint64_t seed);

// y = Phi x + r with r ~ N(0, (noise_pct * RMS(Phi x))^2 I).
Measurements compress(const ProjectionMatrix& phi, const Signal& x,
                      double noise_pct, std::uint64_t seed);

SparseCoefficients basis_forward(const Basis& psi, const Signal& x);
Signal basis_inverse(const Basis& psi, const SparseCoefficients& w);

struct ThresholdResult {
  SparseCoefficients coeffs;
  std::size_t nonzeros = 0;
};

// Zeroes every entry with |w_i| < tau.
ThresholdResult hard_threshold(const SparseCoefficients& w, double tau);

// Theta = Phi Psi, K x N.
Eigen::MatrixXd design_matrix(const ProjectionMatrix& phi, const Basis& psi);

double rms(const Eigen::VectorXd& v);
// Unbiased sample variance.
double sample_variance(const Eigen::VectorXd& v);

}  // namespace bcs

#endif  // BCS_SIGNALGEN_HPP_
