#include <cmath>
#include <limits>
#include <stdexcept>

#include <gtest/gtest.h>

#include "bcs/errors.hpp"
#include "bcs/evidence_model.hpp"
#include "bcs/oracle.hpp"
#include "bcs/solvers.hpp"
#include "test_helpers.hpp"

namespace bcs {
namespace {

using testing::rel_diff;

struct Planted {
  Eigen::MatrixXd theta;
  Eigen::VectorXd w;
  Eigen::VectorXd y;
};

Planted planted(std::uint64_t seed, Eigen::Index k, Eigen::Index n, Eigen::Index t,
                double noise = 0.0) {
  Rng rng(seed);
  Planted p;
  p.theta = testing::gaussian_matrix(k, n, rng);
  p.w = gen_spikes(n, t, SpikeKind::kGaussian, seed + 1).values;
  for (Eigen::Index i = 0; i < n; ++i)
    if (p.w[i] != 0.0) p.w[i] += p.w[i] > 0 ? 0.5 : -0.5;
  p.y = p.theta * p.w + noise * testing::gaussian_vector(k, rng);
  return p;
}

SolverConfig config_for(Variant v, std::uint64_t seed = 1) {
  SolverConfig cfg;
  cfg.variant = v;
  cfg.seed = seed;
  if (v == Variant::kBottomUpFixed) cfg.fixed_sigma2_frac = 1e-8;
  return cfg;
}

HyperState result_state(const ReconstructionResult& r) {
  HyperState s;
  s.active = r.active_set;
  s.alpha = r.alpha;
  s.sigma2 = r.sigma2_final;
  s.b_param = r.b_final;
  return s;
}

TEST(Variant, NamesRoundTrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_EQ(parse_variant("BCS-SO*"), Variant::kSoStar);
  EXPECT_EQ(parse_variant("bcs-b-f"), Variant::kBottomUpFixed);
  EXPECT_THROW(parse_variant("bp"), std::invalid_argument);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.inner_tol = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.alpha_prune_cap = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.sigma2_init = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(SolverConfig{}.inner_cap(7), 70);
  EXPECT_EQ(default_outer_eps(0.05), 0.05);
  EXPECT_EQ(default_outer_eps(0.0), 1e-5);
}

TEST(Solve, ZeroDataGivesEmptyModel) {
  Rng rng(3);
  const Eigen::MatrixXd theta = testing::gaussian_matrix(8, 16, rng);
  for (Variant v : kAllVariants) {
    const ReconstructionResult r = solve(theta, Eigen::VectorXd::Zero(8), config_for(v));
    EXPECT_TRUE(r.active_set.empty()) << variant_name(v);
    EXPECT_TRUE(r.x_hat.values.isZero(0.0));
    EXPECT_EQ(r.x_hat.size(), 16);
    EXPECT_TRUE(r.error_bars.isZero(0.0));
  }
}

TEST(Solve, SingleSpikeMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Planted p = planted(50 + seed, 12, 16, 1);
    const oracle::OracleSolution o = oracle::exhaustive_recover(p.theta, p.y, 3);
    for (Variant v : kAllVariants) {
      const ReconstructionResult r = solve(p.theta, p.y, config_for(v, seed));
      EXPECT_EQ(r.active_set.size(), o.support.size()) << variant_name(v);
      for (std::size_t j = 0; j < o.support.size(); ++j)
        EXPECT_NEAR(r.w_hat.values[o.support[j]], o.coeffs[j], 1e-6) << variant_name(v);
      EXPECT_NEAR((r.w_hat.values - p.w).cwiseAbs().maxCoeff(), 0.0, 1e-6);
    }
  }
}

TEST(Solve, ResultInvariants) {
  const Planted p = planted(9, 24, 64, 4, 1e-3);
  const Basis psi = Basis::haar(64);
  for (Variant v : kAllVariants) {
    const ReconstructionResult r = solve(p.theta, p.y, config_for(v), psi);
    ASSERT_TRUE(r.diagnostic.empty()) << r.diagnostic;
    EXPECT_EQ(r.alpha.size(), static_cast<Eigen::Index>(r.active_set.size()));
    EXPECT_TRUE((r.error_bars.array() >= 0.0).all());
    EXPECT_LT((r.x_hat.values - basis_inverse(psi, r.w_hat).values).cwiseAbs().maxCoeff(),
              1e-14);
    for (Eigen::Index i = 0; i < 64; ++i) {
      if (result_state(r).position(i) < 0) {
        EXPECT_EQ(r.w_hat.values[i], 0.0);
      }
    }
  }
}

TEST(Solve, ErrorBarsMatchDenseProduct) {
  const Planted p = planted(19, 20, 32, 3, 1e-2);
  const Basis psi = Basis::haar(32);
  const ReconstructionResult r = solve(p.theta, p.y, config_for(Variant::kSoStar), psi);
  ASSERT_FALSE(r.active_set.empty());
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(32, 32);
  for (std::size_t a = 0; a < r.active_set.size(); ++a)
    for (std::size_t b = 0; b < r.active_set.size(); ++b)
      full(r.active_set[a], r.active_set[b]) = r.posterior.sigma(a, b);
  const Eigen::MatrixXd dense = psi.dense();
  const Eigen::MatrixXd cov = dense * full * dense.transpose();
  for (Eigen::Index i = 0; i < 32; ++i)
    EXPECT_NEAR(r.error_bars[i], std::sqrt(std::max(cov(i, i), 0.0)), 1e-10);
}

TEST(Solve, SeededDeterminism) {
  const Planted p = planted(23, 30, 80, 6, 1e-3);
  for (Variant v : kAllVariants) {
    const ReconstructionResult a = solve(p.theta, p.y, config_for(v, 77));
    const ReconstructionResult b = solve(p.theta, p.y, config_for(v, 77));
    EXPECT_EQ(a.x_hat.values, b.x_hat.values);
    EXPECT_EQ(a.active_set, b.active_set);
    EXPECT_EQ(a.inner_iters, b.inner_iters);
    EXPECT_EQ(a.final_log_evidence, b.final_log_evidence);
  }
}

TEST(Solve, MapConsistencyOnConvergedResults) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Planted p = planted(300 + seed, 30, 64, 5, 1e-2);
    for (Variant v : {Variant::kBottomUpFixed, Variant::kBottomUpUpdate, Variant::kSo,
                      Variant::kSoStar}) {
      SolverConfig cfg = config_for(v, seed);
      cfg.fixed_sigma2_frac = 0.01;
      const ReconstructionResult r = solve(p.theta, p.y, cfg);
      if (!r.converged || r.overflow_pruned) continue;
      ++checked;
      EvidenceModel model(p.theta, p.y);
      model.reset(result_state(r));
      for (Eigen::Index n = 0; n < 64; ++n) {
        const FactorPair f = model.factor(n);
        const double q2 = f.q_factor * f.q_factor;
        const Precision a = model.state().precision(n);
        if (a.is_active()) {
          ASSERT_GT(q2, f.s_factor);
          EXPECT_LT(rel_diff(a.value(), f.s_factor * f.s_factor / (q2 - f.s_factor)), 1e-6)
              << variant_name(v) << " seed " << seed << " n " << n;
        } else {
          EXPECT_LE(q2, f.s_factor * (1.0 + 1e-6)) << variant_name(v) << " n " << n;
        }
      }
    }
  }
  EXPECT_GE(checked, 16);
}

TEST(BottomUp, FirstActionAddsExactColumn) {
  Rng rng(31);
  const Eigen::MatrixXd theta = testing::gaussian_matrix(20, 40, rng);
  for (Eigen::Index n : {0, 17, 39}) {
    const Eigen::VectorXd y = 1.7 * theta.col(n);
    EvidenceModel model(theta, y);
    HyperState empty;
    empty.sigma2 = 0.1 * data_scale(y);
    model.reset(empty);
    const auto cands = model.candidates();
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < 40; ++i)
      if (cands[i].action == Action::kAdd && (best < 0 || cands[i].gain > cands[best].gain))
        best = i;
    EXPECT_EQ(best, n);
    SolverConfig cfg = config_for(Variant::kBottomUpFixed);
    cfg.fixed_sigma2_frac = 0.1;
    cfg.record_trace = true;
    const ReconstructionResult r = solve(theta, y, cfg);
    ASSERT_FALSE(r.trace.empty());
    EXPECT_EQ(r.trace.front().model_size, 1);
    EXPECT_NE(std::find(r.active_set.begin(), r.active_set.end(), n), r.active_set.end());
  }
}

TEST(BottomUp, EvidenceNonDecreasingBetweenNoiseUpdates) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Planted p = planted(400 + seed, 40, 128, 8, 1e-2);
    for (Variant v : {Variant::kBottomUpFixed, Variant::kBottomUpUpdate}) {
      SolverConfig cfg = config_for(v);
      cfg.fixed_sigma2_frac = 0.05;
      cfg.record_trace = true;
      const ReconstructionResult r = solve(p.theta, p.y, cfg);
      ASSERT_GE(r.trace.size(), 2u);
      for (std::size_t i = 1; i < r.trace.size(); ++i) {
        if (r.trace[i].sigma2 != r.trace[i - 1].sigma2) continue;
        EXPECT_GE(r.trace[i].log_evidence - r.trace[i - 1].log_evidence, -1e-10);
      }
    }
  }
}

TEST(TopDown, EvidenceNonDecreasingAtFixedNoise) {
  const Planted p = planted(41, 30, 64, 4, 1e-2);
  SolverConfig cfg = config_for(Variant::kTopDown);
  cfg.record_trace = true;
  const ReconstructionResult r = solve(p.theta, p.y, cfg);
  int compared = 0;
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    if (r.trace[i].sigma2 != r.trace[i - 1].sigma2) continue;
    ++compared;
    EXPECT_GE(r.trace[i].log_evidence - r.trace[i - 1].log_evidence, -1e-10);
  }
  EXPECT_LE(static_cast<Eigen::Index>(r.active_set.size()), 30);
}

TEST(StochasticPass, SingleAdmissibleActionIsDeterministicStep) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(4, 3);
  theta(0, 0) = theta(1, 1) = theta(2, 2) = 1.0;
  const Eigen::Vector4d y(2.0, 0.0, 0.0, 0.3);
  HyperState empty;
  empty.sigma2 = 1.0;
  EvidenceModel model(theta, y);
  model.reset(empty);
  const auto cands = model.candidates();
  int admissible = 0;
  for (const auto& c : cands) admissible += c.action != Action::kNone;
  ASSERT_EQ(admissible, 1);
  EvidenceModel stepped(theta, y);
  stepped.reset(empty);
  stepped.apply(0, cands[0]);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const HyperState after = stochastic_pass(empty, theta, y, s);
    EXPECT_EQ(after.active, stepped.state().active);
    EXPECT_EQ(after.alpha, stepped.state().alpha);
  }
  EXPECT_NEAR(stepped.state().alpha[0], 1.0 / 3.0, 1e-15);
}

TEST(StochasticPass, IrrelevantTermNeverAdded) {
  const Planted p = planted(61, 10, 20, 2, 0.05);
  HyperState empty;
  empty.sigma2 = 0.5 * data_scale(p.y);
  EvidenceModel model(p.theta, p.y);
  model.reset(empty);
  std::vector<Eigen::Index> irrelevant;
  for (Eigen::Index n = 0; n < 20; ++n) {
    const FactorPair f = model.factor(n);
    if (f.q_factor * f.q_factor < f.s_factor) irrelevant.push_back(n);
  }
  ASSERT_FALSE(irrelevant.empty());
  Rng rng(62);
  const auto cands = model.candidates();
  for (int pass = 0; pass < 10000; ++pass) {
    model.reset(empty);
    stochastic_pass(model, rng, cands);
    for (Eigen::Index n : irrelevant) ASSERT_EQ(model.state().position(n), -1);
  }
}

TEST(StochasticPass, AcceptanceFrequencyFollowsProbability) {
  // Term 0 is active (always admissible); term 1 is irrelevant, so giving it
  // the top gain only fixes the normalization.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(3, 2);
  theta(0, 0) = 1.0;
  theta(1, 1) = 1.0;
  const Eigen::Vector3d y(1.5, 0.0, 0.2);
  HyperState state;
  state.active = {0};
  state.alpha = Eigen::VectorXd::Constant(1, 2.0);
  EvidenceModel model(theta, y);
  model.reset(state);
  ASSERT_EQ(model.candidate(1).action, Action::kNone);
  std::vector<Candidate> frozen(2);
  frozen[0] = model.candidate(0);
  frozen[0].gain = 0.3;
  frozen[1].action = Action::kAdd;
  frozen[1].gain = 1.0;
  EXPECT_NEAR(acceptance_probabilities(frozen)[0], 0.3, 1e-15);
  Rng rng(5);
  int accepted = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    model.reset(state);
    accepted += static_cast<int>(stochastic_pass(model, rng, frozen).accepted);
  }
  EXPECT_NEAR(static_cast<double>(accepted) / draws, 0.3, 0.015);
}

TEST(AcceptanceProbabilities, NormalizedByLargestGain) {
  std::vector<Candidate> c(4);
  c[0] = {Action::kAdd, 1.0, 2.0, 0.0};
  c[1] = {Action::kDelete, 0.0, 0.5, 0.0};
  c[3] = {Action::kReestimate, 1.0, 1.0, 0.1};
  const Eigen::VectorXd p = acceptance_probabilities(c);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], 0.25);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_DOUBLE_EQ(p[3], 0.5);
  EXPECT_TRUE(acceptance_probabilities(std::vector<Candidate>(3)).isZero(0.0));
}

TEST(Sigma2Update, EmptyModel) {
  const Eigen::Vector3d y(1.0, -2.0, 0.5);
  HyperState s;
  const double v =
      sigma2_update(s, Eigen::VectorXd(0), Eigen::MatrixXd(0, 0), Eigen::MatrixXd(3, 0), y);
  EXPECT_DOUBLE_EQ(v, y.squaredNorm() / 3.0);
}

TEST(Sigma2Update, DegenerateDenominatorThrows) {
  const Planted p = planted(71, 2, 4, 2);
  HyperState s;
  s.active = {0, 1};
  s.alpha = Eigen::Vector2d(1e-6, 1e-6);
  s.a_param = 0.2;
  const Eigen::MatrixXd ta = select_columns(p.theta, s.active);
  const PosteriorGaussian post = posterior_moments(ta, p.y, s);
  EXPECT_THROW(sigma2_update(s, post.mu, post.sigma, ta, p.y), DegenerateUpdate);
}

// Iterates the noise update at fixed alpha until it stops moving.
HyperState noise_fixed_point(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                             HyperState s, bool b_tracks_sigma2) {
  const Eigen::MatrixXd ta = select_columns(theta, s.active);
  for (int it = 0; it < 10000; ++it) {
    const PosteriorGaussian post = posterior_moments(ta, y, s);
    const double next = sigma2_update(s, post.mu, post.sigma, ta, y);
    const bool done = std::abs(next - s.sigma2) <= 1e-15 * s.sigma2;
    s.sigma2 = next;
    if (b_tracks_sigma2) s.b_param = next;
    if (done) break;
  }
  return s;
}

TEST(Sigma2Update, StationaryInInverseNoiseVariance) {
  for (double b : {0.0, 0.05}) {
    const Planted p = planted(81, 8, 10, 2, 0.1);
    HyperState s;
    s.active = {0, 3, 5};
    s.alpha = Eigen::Vector3d(0.5, 2.0, 1.0);
    s.b_param = b;
    s.sigma2 = 0.3;
    s = noise_fixed_point(p.theta, p.y, s, false);
    const auto l_of_beta = [&](double beta) {
      HyperState t = s;
      t.sigma2 = 1.0 / beta;
      return log_evidence(p.theta, p.y, t, GammaPrior::kInclude);
    };
    const double beta = 1.0 / s.sigma2;
    const double d = oracle::finite_difference(l_of_beta, beta, 1e-5 * beta);
    EXPECT_LT(std::abs(d * beta) / std::max(1.0, std::abs(l_of_beta(beta))), 1e-6);
  }
}

TEST(Sigma2Update, ClosedFormFixedPointForSoStar) {
  const Planted p = planted(91, 40, 100, 6, 0.01);
  const ReconstructionResult r = solve(p.theta, p.y, config_for(Variant::kSoStar, 3));
  ASSERT_TRUE(r.diagnostic.empty());
  HyperState s = result_state(r);
  s.b_param = s.sigma2;
  s = noise_fixed_point(p.theta, p.y, s, true);
  const Eigen::MatrixXd ta = select_columns(p.theta, s.active);
  const PosteriorGaussian post = posterior_moments(ta, p.y, s);
  double gamma = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) gamma += 1.0 - s.alpha[j] * post.sigma(j, j);
  const double closed = (p.y - ta * post.mu).squaredNorm() / (40.0 - gamma - 2.0);
  EXPECT_LT(std::abs(s.sigma2 - closed) / closed, 1e-6);
}

TEST(OverflowPrune, NoOpWhenNotOverFull) {
  const Planted p = planted(101, 10, 20, 2);
  HyperState s;
  s.active = {1, 4, 7};
  s.alpha = Eigen::Vector3d(1.0, 2.0, 3.0);
  const OverflowResult r = overflow_prune(s, p.theta, p.y, SolverConfig{});
  EXPECT_EQ(r.state.active, s.active);
  EXPECT_EQ(r.state.alpha, s.alpha);
  EXPECT_EQ(r.iterations, 0);
}

TEST(OverflowPrune, ExpansionUsesMeanPriorVariance) {
  HyperState s;
  s.active = {2, 0};
  s.alpha = Eigen::Vector2d(1.0, 4.0);
  const HyperState full = expand_to_full(s, 5);
  ASSERT_EQ(full.size(), 5);
  const double fill = 1.0 / ((1.0 + 0.25) / 2.0);
  EXPECT_DOUBLE_EQ(full.alpha[full.position(2)], 1.0);
  EXPECT_DOUBLE_EQ(full.alpha[full.position(0)], 4.0);
  for (Eigen::Index n : {1, 3, 4}) EXPECT_DOUBLE_EQ(full.alpha[full.position(n)], fill);
}

TEST(OverflowPrune, OverFullStatesPruneBelowK) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Planted p = planted(500 + seed, 20, 64, 4, 0.01);
    Rng rng(600 + seed);
    std::vector<Eigen::Index> idx(64);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    HyperState s;
    s.active.assign(idx.begin(), idx.begin() + 30);
    s.alpha = Eigen::VectorXd::Constant(30, 1.0);
    s.sigma2 = 0.05 * data_scale(p.y);
    const OverflowResult r = overflow_prune(s, p.theta, p.y, SolverConfig{});
    EXPECT_TRUE(r.converged) << "seed " << seed;
    EXPECT_LE(r.state.size(), 20);
    EXPECT_TRUE(std::isfinite(log_evidence(p.theta, p.y, r.state)));
  }
}

}  // namespace
}  // namespace bcs
