#include <cmath>

#include <gtest/gtest.h>

#include "bcs/evidence_model.hpp"
#include "bcs/oracle.hpp"
#include "bcs/posterior.hpp"
#include "test_helpers.hpp"

namespace bcs {
namespace {

using testing::Instance;
using testing::max_abs_diff;
using testing::random_instance;
using testing::rel_diff;

class EvidenceModelRegimes : public ::testing::TestWithParam<Eigen::Index> {};

TEST_P(EvidenceModelRegimes, MatchesStatelessFunctions) {
  const Eigen::Index np = GetParam();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = random_instance(40 + seed, 6, 12, np);
    EvidenceModel model(inst.theta, inst.y);
    model.reset(inst.state);
    EXPECT_LT(rel_diff(model.log_evidence(), log_evidence(inst.theta, inst.y, inst.state)),
              1e-10);
    if (np > 0) {
      const Eigen::MatrixXd ta = select_columns(inst.theta, inst.state.active);
      const PosteriorGaussian p = posterior_moments(ta, inst.y, inst.state);
      EXPECT_LT(max_abs_diff(model.posterior().sigma, p.sigma), 1e-10);
      EXPECT_LT(max_abs_diff(model.posterior().mu, p.mu), 1e-10);
      EXPECT_LT(max_abs_diff(model.residual(), inst.y - ta * p.mu), 1e-10);
      double gamma = 0.0;
      for (Eigen::Index j = 0; j < np; ++j) gamma += 1.0 - inst.state.alpha[j] * p.sigma(j, j);
      EXPECT_NEAR(model.gamma_sum(), gamma, 1e-10);
    }
    // Single-term queries before and after a full scan.
    std::vector<FactorPair> lazy;
    for (Eigen::Index n = 0; n < 12; ++n) lazy.push_back(model.factor(n));
    const auto cands = model.candidates();
    ASSERT_EQ(cands.size(), 12u);
    for (Eigen::Index n = 0; n < 12; ++n) {
      const FactorPair f = model.factor(n);
      const FactorPair d = oracle::dense_factors(inst.theta, inst.y, inst.state, n);
      EXPECT_LT(rel_diff(f.s_factor, d.s_factor), 1e-8) << "n=" << n;
      EXPECT_LT(rel_diff(f.q_factor, d.q_factor), 1e-8) << "n=" << n;
      EXPECT_LT(rel_diff(lazy[n].s_factor, f.s_factor), 1e-10);
      EXPECT_LT(rel_diff(lazy[n].q_factor, f.q_factor), 1e-10);
    }
  }
}

TEST_P(EvidenceModelRegimes, CandidateGainMatchesEvidenceChange) {
  const Eigen::Index np = GetParam();
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Instance inst = random_instance(90 + seed, 6, 10, np);
    EvidenceModel base(inst.theta, inst.y);
    base.reset(inst.state);
    const auto cands = base.candidates();
    for (Eigen::Index n = 0; n < 10; ++n) {
      const Candidate& c = cands[n];
      if (c.action == Action::kNone) {
        EXPECT_FALSE(inst.state.precision(n).is_active());
        continue;
      }
      EXPECT_GE(c.gain, -1e-12);
      EvidenceModel moved(inst.theta, inst.y);
      moved.reset(inst.state);
      moved.apply(n, c);
      const double delta = moved.log_evidence() - base.log_evidence();
      EXPECT_LT(std::abs(delta - c.gain), 1e-8) << "n=" << n;
      EXPECT_LT(std::abs(moved.log_evidence() -
                         log_evidence(inst.theta, inst.y, moved.state())),
                1e-8);
      if (c.action == Action::kDelete) {
        EXPECT_EQ(moved.state().position(n), -1);
      } else {
        EXPECT_DOUBLE_EQ(moved.state().alpha[moved.state().position(n)], c.alpha_new);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(DirectAndWoodbury, EvidenceModelRegimes,
                         ::testing::Values(Eigen::Index{0}, Eigen::Index{3},
                                           Eigen::Index{6}, Eigen::Index{9}));

TEST(EvidenceModel, CandidateKinds) {
  const Instance inst = random_instance(5, 8, 10, 4);
  EvidenceModel model(inst.theta, inst.y);
  model.reset(inst.state);
  for (Eigen::Index n = 0; n < 10; ++n) {
    const FactorPair f = model.factor(n);
    const Candidate c = model.candidate(n);
    const bool active = inst.state.precision(n).is_active();
    const bool relevant = f.q_factor * f.q_factor > f.s_factor;
    if (!active) {
      EXPECT_EQ(c.action, relevant ? Action::kAdd : Action::kNone);
    } else {
      EXPECT_EQ(c.action, relevant ? Action::kReestimate : Action::kDelete);
    }
    if (relevant) {
      EXPECT_NEAR(c.alpha_new, optimal_alpha(f).value(), 1e-12 * c.alpha_new);
      EXPECT_NEAR(c.gain,
                  per_term_gain(Precision::finite(c.alpha_new), f) -
                      per_term_gain(inst.state.precision(n), f),
                  1e-9);
    }
  }
}

TEST(EvidenceModel, SigmaChangeAndGammaPrior) {
  Instance inst = random_instance(6, 8, 10, 3);
  EvidenceModel model(inst.theta, inst.y);
  model.reset(inst.state);
  model.set_sigma2(0.37);
  model.set_b_param(0.2);
  inst.state.sigma2 = 0.37;
  inst.state.b_param = 0.2;
  EXPECT_LT(rel_diff(model.log_evidence(GammaPrior::kInclude),
                     log_evidence(inst.theta, inst.y, inst.state, GammaPrior::kInclude)),
            1e-10);
  EXPECT_EQ(model.state().sigma2, 0.37);
}

}  // namespace
}  // namespace bcs
