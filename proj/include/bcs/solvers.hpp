#ifndef BCS_SOLVERS_HPP_
#define BCS_SOLVERS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bcs/evidence_model.hpp"
#include "bcs/posterior.hpp"
#include "bcs/random.hpp"
#include "bcs/signalgen.hpp"

namespace bcs {

enum class Variant {
  kTopDown,         // BCS-T
  kBottomUpFixed,   // BCS-B-F
  kBottomUpUpdate,  // BCS-B-U
  kSo,              // BCS-SO
  kSoStar,          // BCS-SO*
};

std::string_view variant_name(Variant v);
// Accepts the canonical names (top_down, bottom_up_fixed, ...) and the
// BCS-* labels. Throws std::invalid_argument otherwise.
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::kTopDown, Variant::kBottomUpFixed,
                                           Variant::kBottomUpUpdate, Variant::kSo,
                                           Variant::kSoStar};

struct SolverConfig {
  Variant variant = Variant::kSoStar;
  double inner_tol = 1e-6;         // on max |delta log alpha|
  double outer_eps = 1e-5;         // relative change of the reconstruction
  double alpha_prune_cap = 1e12;
  // Starting (or, for bottom_up_fixed, constant) noise variance. When unset it
  // is fixed_sigma2_frac * var(y).
  std::optional<double> sigma2_init;
  double fixed_sigma2_frac = 0.1;
  Eigen::Index max_inner_iters = 0;  // 0 means 10 N
  int max_outer_iters = 50;
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
  Eigen::Index inner_cap(Eigen::Index n_terms) const {
    return max_inner_iters > 0 ? max_inner_iters : 10 * n_terms;
  }
};

// Default outer tolerance for a given measurement noise fraction.
inline double default_outer_eps(double noise_pct) {
  return noise_pct > 1e-5 ? noise_pct : 1e-5;
}

struct TraceRecord {
  double log_evidence = 0.0;
  Eigen::Index model_size = 0;
  double sigma2 = 0.0;
};

struct ReconstructionResult {
  Signal x_hat;
  SparseCoefficients w_hat;
  Eigen::VectorXd error_bars;        // posterior std of every sample of x
  double mean_error_bar = 0.0;       // over samples with nonzero std
  double mean_error_bar_all = 0.0;   // over all samples
  double final_log_evidence = 0.0;
  std::vector<Eigen::Index> active_set;
  Eigen::VectorXd alpha;             // aligned with active_set
  PosteriorGaussian posterior;       // over the active coefficients
  double sigma2_final = 0.0;
  double b_final = 0.0;
  long inner_iters = 0;
  int outer_iters = 0;
  bool converged = false;
  bool overflow_pruned = false;      // the N' > K fallback ended the run
  bool sigma2_degenerate = false;    // some sigma2 update was skipped
  std::string diagnostic;            // set when a trial aborted
  std::vector<TraceRecord> trace;
};

// Dispatches on cfg.variant.
ReconstructionResult solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                           const SolverConfig& cfg, const Basis& basis);
ReconstructionResult solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                           const SolverConfig& cfg);

ReconstructionResult solve_top_down(const Eigen::MatrixXd& theta,
                                    const Eigen::VectorXd& y, const SolverConfig& cfg,
                                    const Basis& basis);
ReconstructionResult solve_bottom_up(const Eigen::MatrixXd& theta,
                                     const Eigen::VectorXd& y, const SolverConfig& cfg,
                                     const Basis& basis);
ReconstructionResult solve_bcs_so(const Eigen::MatrixXd& theta,
                                  const Eigen::VectorXd& y, const SolverConfig& cfg,
                                  const Basis& basis);

// Acceptance probabilities p_n = gain_n / max gain of the current state; zero
// for terms without an admissible action.
Eigen::VectorXd acceptance_probabilities(const std::vector<Candidate>& cands);

struct PassStats {
  Eigen::Index accepted = 0;
  Eigen::Index structural = 0;        // accepted additions and deletions
  double max_log_alpha_change = 0.0;  // over accepted re-estimates
  double max_gain = 0.0;
};

// One stochastic sweep over all terms in a fresh random order. Probabilities
// are fixed at the start of the pass; the action applied to an accepted term is
// re-derived from the refreshed model.
PassStats stochastic_pass(EvidenceModel& model, Rng& rng);
PassStats stochastic_pass(EvidenceModel& model, Rng& rng,
                          const std::vector<Candidate>& pass_start);
HyperState stochastic_pass(const HyperState& state, const Eigen::MatrixXd& theta,
                           const Eigen::VectorXd& y, std::uint64_t seed);

// (|y - Theta mu|^2 + 2b) / (K - sum(1 - alpha_n Sigma_nn) + 2(a - 1)).
// Throws DegenerateUpdate when the denominator is not positive.
double sigma2_update(const HyperState& state, const Eigen::VectorXd& mu,
                     const Eigen::MatrixXd& sigma_mat,
                     const Eigen::MatrixXd& theta_active, const Eigen::VectorXd& y);

struct OverflowResult {
  HyperState state;
  bool converged = true;
  long iterations = 0;
  bool sigma2_degenerate = false;
};

// Full model over all n_terms terms: active terms keep their alpha, the rest
// get 1 / mean(1 / alpha_active).
HyperState expand_to_full(const HyperState& state, Eigen::Index n_terms);

// Expands an over-full model (N' > K) to all N terms, runs Top-down
// re-estimation at fixed sigma2 until pruning settles, then re-estimates
// sigma2. Identity when N' <= K.
OverflowResult overflow_prune(const HyperState& state, const Eigen::MatrixXd& theta,
                              const Eigen::VectorXd& y, const SolverConfig& cfg);

// Scale used for the noise-variance default and floor: var(y), or |y|^2/K when
// the sample variance is zero or undefined.
double data_scale(const Eigen::VectorXd& y);

}  // namespace bcs

#endif  // BCS_SOLVERS_HPP_
