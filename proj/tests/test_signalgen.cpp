#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <gtest/gtest.h>

#include "bcs/random.hpp"
#include "bcs/signalgen.hpp"
#include "test_helpers.hpp"

namespace bcs {
namespace {

using testing::gaussian_vector;

TEST(GenSpikes, UniformHasExactSupportOfUnitMagnitude) {
  const Signal s = gen_spikes(512, 20, SpikeKind::kUniform, 7);
  ASSERT_EQ(s.size(), 512);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s.values[i] != 0.0) {
      ++nonzero;
      EXPECT_EQ(std::abs(s.values[i]), 1.0);
    }
  }
  EXPECT_EQ(nonzero, 20);
}

TEST(GenSpikes, GaussianHasExactSupport) {
  const Signal s = gen_spikes(256, 30, SpikeKind::kGaussian, 3);
  EXPECT_EQ((s.values.array() != 0.0).count(), 30);
}

TEST(GenSpikes, ZeroSpikesGivesZeroVector) {
  const Signal s = gen_spikes(8, 0, SpikeKind::kUniform, 1);
  ASSERT_EQ(s.size(), 8);
  EXPECT_TRUE(s.values.isZero(0.0));
}

TEST(GenSpikes, DeterministicGivenSeed) {
  const Signal a = gen_spikes(512, 20, SpikeKind::kGaussian, 99);
  const Signal b = gen_spikes(512, 20, SpikeKind::kGaussian, 99);
  EXPECT_EQ(a.values, b.values);
  const Signal c = gen_spikes(512, 20, SpikeKind::kGaussian, 100);
  EXPECT_NE(a.values, c.values);
}

TEST(GenSpikes, FullSupportAndTooManySpikes) {
  EXPECT_EQ((gen_spikes(16, 16, SpikeKind::kUniform, 2).values.array() != 0.0).count(), 16);
  EXPECT_THROW(gen_spikes(8, 9, SpikeKind::kUniform, 1), std::invalid_argument);
}

TEST(GenSpikes, PositionsAreRoughlyUniform) {
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(16);
  for (std::uint64_t s = 0; s < 4000; ++s)
    hits += gen_spikes(16, 4, SpikeKind::kUniform, s).values.cwiseAbs();
  // Expected 1000 per position, binomial std about 27.
  for (Eigen::Index i = 0; i < 16; ++i) EXPECT_NEAR(hits[i], 1000.0, 150.0);
}

TEST(GenProjection, ShapeAndMoments) {
  const ProjectionMatrix phi = gen_projection(100, 512, 5);
  ASSERT_EQ(phi.rows(), 100);
  ASSERT_EQ(phi.cols(), 512);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < phi.cols(); ++j)
    for (Eigen::Index i = 0; i < phi.rows(); ++i) sum += phi.entries(i, j);
  const double count = 100.0 * 512.0;
  const double mean = sum / count;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(count));
  double ss = 0.0;
  for (Eigen::Index j = 0; j < phi.cols(); ++j)
    for (Eigen::Index i = 0; i < phi.rows(); ++i) ss += std::pow(phi.entries(i, j) - mean, 2);
  const double var = ss / (count - 1.0);
  EXPECT_GE(var, 0.95);
  EXPECT_LE(var, 1.05);
}

TEST(GenProjection, ScalarAndDeterminism) {
  const ProjectionMatrix p = gen_projection(1, 1, 4);
  EXPECT_EQ(p.rows(), 1);
  EXPECT_EQ(p.cols(), 1);
  EXPECT_EQ(gen_projection(20, 30, 8).entries, gen_projection(20, 30, 8).entries);
  EXPECT_THROW(gen_projection(0, 4, 1), std::invalid_argument);
}

TEST(Compress, ZeroSignalNoNoise) {
  const ProjectionMatrix phi = gen_projection(10, 20, 1);
  const Measurements y = compress(phi, Signal{Eigen::VectorXd::Zero(20)}, 0.0, 2);
  EXPECT_TRUE(y.values.isZero(0.0));
}

TEST(Compress, NoiseFreeMatchesTripleLoop) {
  const ProjectionMatrix phi = gen_projection(30, 64, 11);
  Rng rng(12);
  const Signal x{gaussian_vector(64, rng)};
  const Measurements y = compress(phi, x, 0.0, 13);
  for (Eigen::Index i = 0; i < 30; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < 64; ++j) acc += phi.entries(i, j) * x.values[j];
    EXPECT_NEAR(y.values[i], acc, 1e-12);
  }
}

TEST(Compress, NoiseCalibration) {
  const ProjectionMatrix phi = gen_projection(100, 64, 21);
  const Signal x = gen_spikes(64, 8, SpikeKind::kGaussian, 22);
  const Eigen::VectorXd clean = phi.entries * x.values;
  const double target = 0.05 * rms(clean);
  double ss = 0.0;
  long count = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Measurements y = compress(phi, x, 0.05, 1000 + s);
    ss += (y.values - clean).squaredNorm();
    count += 100;
  }
  const double std_dev = std::sqrt(ss / static_cast<double>(count));
  EXPECT_NEAR(std_dev, target, 0.05 * target);
}

TEST(Compress, Errors) {
  const ProjectionMatrix phi = gen_projection(4, 8, 1);
  EXPECT_THROW(compress(phi, Signal{Eigen::VectorXd::Zero(7)}, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(compress(phi, Signal{Eigen::VectorXd::Zero(8)}, -0.1, 1), std::invalid_argument);
}

TEST(Haar, ConstantSignalHasOneCoefficient) {
  const Basis psi = Basis::haar(64);
  const SparseCoefficients w = basis_forward(psi, Signal{Eigen::VectorXd::Constant(64, 3.0)});
  EXPECT_NEAR(w.values[0], 3.0 * 8.0, 1e-12);
  for (Eigen::Index i = 1; i < 64; ++i) EXPECT_NEAR(w.values[i], 0.0, 1e-13);
}

TEST(Haar, IdentityBasisForwardIsIdentity) {
  Rng rng(3);
  const Signal x{gaussian_vector(32, rng)};
  EXPECT_EQ(basis_forward(Basis::identity(32), x).values, x.values);
}

TEST(Haar, DenseEightIsOrthonormal) {
  const Eigen::MatrixXd psi = Basis::haar(8).dense();
  EXPECT_LT(testing::max_abs_diff(psi.transpose() * psi, Eigen::MatrixXd::Identity(8, 8)), 1e-12);
}

TEST(Haar, OrthonormalUpTo1024) {
  for (Eigen::Index n = 1; n <= 1024; n *= 2) {
    const Eigen::MatrixXd psi = Basis::haar(n).dense();
    EXPECT_LT(testing::max_abs_diff(psi.transpose() * psi, Eigen::MatrixXd::Identity(n, n)),
              1e-10)
        << "N=" << n;
  }
}

TEST(Haar, RoundTrip) {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = Eigen::Index{1} << (1 + t % 10);
    const Basis psi = Basis::haar(n);
    const Signal x{gaussian_vector(n, rng)};
    const Signal back = basis_inverse(psi, basis_forward(psi, x));
    EXPECT_LT((back.values - x.values).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Haar, ForwardIsTransposeOfInverse) {
  const Basis psi = Basis::haar(16);
  const Eigen::MatrixXd dense = psi.dense();
  Rng rng(5);
  const Eigen::VectorXd v = gaussian_vector(16, rng);
  EXPECT_LT((psi.analyze(v) - dense.transpose() * v).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((psi.synthesize(v) - dense * v).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index n = 0; n < 16; ++n)
    EXPECT_LT((psi.column(n) - dense.col(n)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Haar, RejectsNonPowerOfTwo) {
  EXPECT_THROW(Basis::haar(12), std::invalid_argument);
  EXPECT_THROW(Basis::haar(0), std::invalid_argument);
  EXPECT_NO_THROW(Basis::identity(12));
}

TEST(HardThreshold, SmallTauLeavesDenseVectorUnchanged) {
  Eigen::VectorXd v(5);
  v << 0.5, -0.2, 1.0, -3.0, 0.01;
  const ThresholdResult r = hard_threshold(SparseCoefficients{v, BasisKind::kHaar}, 1e-4);
  EXPECT_EQ(r.coeffs.values, v);
  EXPECT_EQ(r.nonzeros, 5u);
  EXPECT_EQ(r.coeffs.basis, BasisKind::kHaar);
}

TEST(HardThreshold, CountMatchesScan) {
  Rng rng(8);
  const Eigen::VectorXd v = 1e-3 * gaussian_vector(500, rng);
  const double tau = 1e-3;
  const ThresholdResult r = hard_threshold(SparseCoefficients{v}, tau);
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= tau) {
      ++count;
      EXPECT_EQ(r.coeffs.values[i], v[i]);
    } else {
      EXPECT_EQ(r.coeffs.values[i], 0.0);
    }
  }
  EXPECT_EQ(r.nonzeros, count);
  EXPECT_THROW(hard_threshold(SparseCoefficients{v}, 0.0), std::invalid_argument);
}

TEST(DesignMatrix, IdentityBasisGivesPhi) {
  const ProjectionMatrix phi = gen_projection(6, 16, 2);
  EXPECT_EQ(design_matrix(phi, Basis::identity(16)), phi.entries);
}

TEST(DesignMatrix, HaarCompositionAndShape) {
  const ProjectionMatrix phi = gen_projection(12, 64, 9);
  const Basis psi = Basis::haar(64);
  const Eigen::MatrixXd theta = design_matrix(phi, psi);
  ASSERT_EQ(theta.rows(), 12);
  ASSERT_EQ(theta.cols(), 64);
  Rng rng(10);
  for (int t = 0; t < 10; ++t) {
    const SparseCoefficients w{gaussian_vector(64, rng), BasisKind::kHaar};
    const Eigen::VectorXd direct = phi.entries * basis_inverse(psi, w).values;
    EXPECT_LT((theta * w.values - direct).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_THROW(design_matrix(phi, Basis::haar(32)), std::invalid_argument);
}

TEST(Random, DerivedSeedsArePureAndDistinct) {
  EXPECT_EQ(derive_seed(1, "phi", {2, 3}), derive_seed(1, "phi", {2, 3}));
  EXPECT_NE(derive_seed(1, "phi", {2, 3}), derive_seed(1, "phi", {3, 2}));
  EXPECT_NE(derive_seed(1, "phi"), derive_seed(1, "noise"));
  EXPECT_NE(derive_seed(1, "phi"), derive_seed(2, "phi"));
}

}  // namespace
}  // namespace bcs
