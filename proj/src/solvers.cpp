#include "bcs/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "bcs/errors.hpp"
#include "bcs/metrics.hpp"

namespace bcs {
namespace {

// Add/delete moves worth no more than this do not hold up convergence.
constexpr double kMinActionGain = 1e-13;
// A stochastic pass whose best move gains less than this counts as settled.
constexpr double kSettledPassGain = 1e-8;
constexpr double kSigma2FloorFrac = 1e-12;
constexpr int kBottomUpSigmaCadence = 5;

struct Inspection {
  bool alpha_settled = true;
  double max_gain = 0.0;
  Eigen::Index best = -1;
};

// Scans candidate moves: best gain (lowest index on ties) and whether the
// log-alpha termination test holds.
Inspection inspect(const std::vector<Candidate>& cands, double tol) {
  Inspection out;
  for (std::size_t n = 0; n < cands.size(); ++n) {
    const Candidate& c = cands[n];
    if (c.action == Action::kNone) continue;
    if (c.gain > out.max_gain) {
      out.max_gain = c.gain;
      out.best = static_cast<Eigen::Index>(n);
    }
    if (c.action == Action::kReestimate) {
      if (c.log_alpha_change >= tol) out.alpha_settled = false;
    } else if (c.gain > kMinActionGain) {
      out.alpha_settled = false;
    }
  }
  return out;
}

Eigen::Index seed_term(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y) {
  const Eigen::VectorXd ty = theta.transpose() * y;
  const Eigen::VectorXd norms = theta.colwise().squaredNorm().transpose();
  Eigen::Index best = -1;
  double best_val = -1.0;
  for (Eigen::Index n = 0; n < theta.cols(); ++n) {
    if (norms[n] <= 0.0) continue;
    const double v = ty[n] * ty[n] / norms[n];
    if (v > best_val) {
      best_val = v;
      best = n;
    }
  }
  return best;
}

Eigen::VectorXd full_coefficients(Eigen::Index n_terms, const HyperState& state,
                                  const Eigen::VectorXd& mu) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n_terms);
  for (Eigen::Index j = 0; j < state.size(); ++j) w[state.active[j]] = mu[j];
  return w;
}

void finalize(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
              const HyperState& state, const Basis& basis, ReconstructionResult& r) {
  const Eigen::MatrixXd theta_a = select_columns(theta, state.active);
  r.posterior = posterior_moments(theta_a, y, state);
  r.active_set = state.active;
  r.alpha = state.alpha;
  r.sigma2_final = state.sigma2;
  r.b_final = state.b_param;
  r.w_hat = {full_coefficients(theta.cols(), state, r.posterior.mu), basis.kind()};
  r.x_hat = basis_inverse(basis, r.w_hat);
  const ErrorBars eb = error_bars(r.posterior.sigma, basis, state.active);
  r.error_bars = eb.per_sample;
  r.mean_error_bar = eb.mean_nonzero;
  r.mean_error_bar_all = eb.mean_all;
  r.final_log_evidence = log_evidence(theta, y, state);
}

ReconstructionResult zero_data_result(const Eigen::MatrixXd& theta, const Basis& basis) {
  ReconstructionResult r;
  r.w_hat = {Eigen::VectorXd::Zero(theta.cols()), basis.kind()};
  r.x_hat = basis_inverse(basis, r.w_hat);
  r.error_bars = Eigen::VectorXd::Zero(theta.cols());
  r.converged = true;
  return r;
}

ReconstructionResult aborted_result(const Eigen::MatrixXd& theta, const Basis& basis,
                                    ReconstructionResult partial,
                                    const std::string& why) {
  ReconstructionResult r = zero_data_result(theta, basis);
  r.converged = false;
  r.inner_iters = partial.inner_iters;
  r.outer_iters = partial.outer_iters;
  r.trace = std::move(partial.trace);
  r.diagnostic = why;
  return r;
}

bool is_zero(const Eigen::VectorXd& y) { return y.size() == 0 || y.isZero(0.0); }

void check_shapes(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                  const Basis& basis) {
  if (theta.rows() != y.size()) {
    throw std::invalid_argument("solver: theta has " + std::to_string(theta.rows()) +
                                " rows but y has length " + std::to_string(y.size()));
  }
  if (theta.cols() != basis.dim()) {
    throw std::invalid_argument("solver: theta/basis dimension mismatch");
  }
}

// Posterior mean and the diagonal of Sigma only, for Top-down iterations.
struct DiagPosterior {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma_diag;
  Eigen::VectorXd residual;
};

DiagPosterior diag_posterior(const Eigen::MatrixXd& theta_a, const Eigen::VectorXd& y,
                             const HyperState& state) {
  const Eigen::Index k = theta_a.rows();
  const Eigen::Index np = theta_a.cols();
  DiagPosterior d;
  if (np <= k) {
    Eigen::MatrixXd m = theta_a.transpose() * theta_a;
    m.diagonal() += state.sigma2 * state.alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedState("Theta^T Theta + sigma2 A is not positive definite",
                                state.active);
    }
    d.mu = llt.solve(theta_a.transpose() * y);
    Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(np, np);
    llt.matrixL().solveInPlace(linv);
    d.sigma_diag = state.sigma2 * linv.colwise().squaredNorm().transpose();
  } else {
    const Eigen::VectorXd inv_alpha = state.alpha.cwiseInverse();
    Eigen::MatrixXd c = theta_a * inv_alpha.asDiagonal() * theta_a.transpose();
    c.diagonal().array() += state.sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedState("C is not positive definite", state.active);
    }
    Eigen::MatrixXd u = theta_a;
    llt.matrixL().solveInPlace(u);
    Eigen::VectorXd ly = y;
    llt.matrixL().solveInPlace(ly);
    d.sigma_diag = inv_alpha.array() -
                   u.colwise().squaredNorm().transpose().array() * inv_alpha.array().square();
    d.mu = inv_alpha.asDiagonal() * (u.transpose() * ly);
  }
  d.residual = y - theta_a * d.mu;
  return d;
}

struct TopDownOutcome {
  HyperState state;
  bool converged = false;
  long iterations = 0;
  bool sigma2_degenerate = false;
};

// Re-estimates every active alpha from the current posterior, optionally
// followed by a noise-variance update, pruning terms whose alpha exceeds the
// cap, until the largest log-alpha change falls below tol.
TopDownOutcome run_top_down(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                            HyperState state, const SolverConfig& cfg,
                            bool update_sigma2, double sigma2_floor,
                            std::vector<TraceRecord>* trace) {
  TopDownOutcome out;
  const Eigen::Index k = theta.rows();
  const Eigen::Index cap = cfg.inner_cap(theta.cols());
  while (out.iterations < cap) {
    if (state.size() == 0) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd theta_a = select_columns(theta, state.active);
    const DiagPosterior d = diag_posterior(theta_a, y, state);
    HyperState next = state;
    next.active.clear();
    std::vector<double> kept_alpha;
    double max_change = 0.0;
    double gamma_sum = 0.0;
    bool pruned = false;
    for (Eigen::Index j = 0; j < state.size(); ++j) {
      const double gamma = 1.0 - state.alpha[j] * d.sigma_diag[j];
      gamma_sum += gamma;
      const double mu2 = d.mu[j] * d.mu[j];
      const double a_new = gamma / mu2;
      if (!(gamma > 0.0) || !(mu2 > 0.0) || !std::isfinite(a_new) ||
          a_new > cfg.alpha_prune_cap) {
        pruned = true;
        continue;
      }
      max_change = std::max(max_change, std::abs(std::log(a_new / state.alpha[j])));
      next.active.push_back(state.active[j]);
      kept_alpha.push_back(a_new);
    }
    next.alpha = Eigen::Map<Eigen::VectorXd>(kept_alpha.data(),
                                             static_cast<Eigen::Index>(kept_alpha.size()));
    if (update_sigma2) {
      const double denom = static_cast<double>(k) - gamma_sum +
                           2.0 * (state.a_param - 1.0);
      if (denom > 0.0) {
        next.sigma2 = std::max((d.residual.squaredNorm() + 2.0 * state.b_param) / denom,
                               sigma2_floor);
      } else {
        out.sigma2_degenerate = true;
      }
    }
    state = std::move(next);
    ++out.iterations;
    if (trace != nullptr && state.size() > 0) {
      trace->push_back({log_evidence(theta, y, state), state.size(), state.sigma2});
    }
    if (!pruned && max_change < cfg.inner_tol) {
      out.converged = true;
      break;
    }
  }
  out.state = std::move(state);
  return out;
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kTopDown: return "top_down";
    case Variant::kBottomUpFixed: return "bottom_up_fixed";
    case Variant::kBottomUpUpdate: return "bottom_up_update";
    case Variant::kSo: return "so";
    case Variant::kSoStar: return "so_star";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (name == variant_name(v)) return v;
  if (name == "bcs-t" || name == "BCS-T") return Variant::kTopDown;
  if (name == "bcs-b-f" || name == "BCS-B-F") return Variant::kBottomUpFixed;
  if (name == "bcs-b-u" || name == "BCS-B-U") return Variant::kBottomUpUpdate;
  if (name == "bcs-so" || name == "BCS-SO") return Variant::kSo;
  if (name == "bcs-so*" || name == "BCS-SO*") return Variant::kSoStar;
  throw std::invalid_argument("unknown solver variant '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(inner_tol > 0.0) || !(outer_eps > 0.0)) {
    throw std::invalid_argument("SolverConfig: tolerances must be positive");
  }
  if (!(alpha_prune_cap > 1.0)) {
    throw std::invalid_argument("SolverConfig: alpha_prune_cap must exceed 1");
  }
  if (sigma2_init && !(*sigma2_init > 0.0)) {
    throw std::invalid_argument("SolverConfig: sigma2_init must be positive");
  }
  if (!(fixed_sigma2_frac > 0.0)) {
    throw std::invalid_argument("SolverConfig: fixed_sigma2_frac must be positive");
  }
  if (max_inner_iters < 0 || max_outer_iters < 1) {
    throw std::invalid_argument("SolverConfig: iteration caps must be positive");
  }
}

double data_scale(const Eigen::VectorXd& y) {
  const double v = sample_variance(y);
  if (v > 0.0) return v;
  return y.size() > 0 ? y.squaredNorm() / static_cast<double>(y.size()) : 0.0;
}

double sigma2_update(const HyperState& state, const Eigen::VectorXd& mu,
                     const Eigen::MatrixXd& sigma_mat,
                     const Eigen::MatrixXd& theta_active, const Eigen::VectorXd& y) {
  const Eigen::Index np = state.size();
  if (mu.size() != np || sigma_mat.rows() != np || theta_active.cols() != np) {
    throw std::invalid_argument("sigma2_update: size mismatch");
  }
  double gamma_sum = 0.0;
  for (Eigen::Index j = 0; j < np; ++j) gamma_sum += 1.0 - state.alpha[j] * sigma_mat(j, j);
  const double denom = static_cast<double>(theta_active.rows()) - gamma_sum +
                       2.0 * (state.a_param - 1.0);
  if (!(denom > 0.0)) {
    throw DegenerateUpdate("sigma2 update denominator is not positive");
  }
  const Eigen::VectorXd r = np > 0 ? Eigen::VectorXd(y - theta_active * mu) : y;
  return (r.squaredNorm() + 2.0 * state.b_param) / denom;
}

Eigen::VectorXd acceptance_probabilities(const std::vector<Candidate>& cands) {
  double max_gain = 0.0;
  for (const auto& c : cands)
    if (c.action != Action::kNone) max_gain = std::max(max_gain, c.gain);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cands.size()));
  if (!(max_gain > 0.0)) return p;
  for (std::size_t n = 0; n < cands.size(); ++n) {
    if (cands[n].action != Action::kNone && cands[n].gain > 0.0) {
      p[static_cast<Eigen::Index>(n)] = cands[n].gain / max_gain;
    }
  }
  return p;
}

PassStats stochastic_pass(EvidenceModel& model, Rng& rng,
                          const std::vector<Candidate>& pass_start) {
  PassStats stats;
  const Eigen::VectorXd p = acceptance_probabilities(pass_start);
  for (const auto& c : pass_start)
    if (c.action != Action::kNone) stats.max_gain = std::max(stats.max_gain, c.gain);
  if (!(stats.max_gain > 0.0)) return stats;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(model.num_terms()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index n : order) {
    const double u = unif(rng);
    if (!(p[n] > 0.0) || p[n] < u) continue;
    const Candidate c = model.candidate(n);
    if (c.action == Action::kNone) continue;
    model.apply(n, c);
    ++stats.accepted;
    if (c.action == Action::kReestimate) {
      stats.max_log_alpha_change = std::max(stats.max_log_alpha_change, c.log_alpha_change);
    } else {
      ++stats.structural;
    }
  }
  return stats;
}

PassStats stochastic_pass(EvidenceModel& model, Rng& rng) {
  return stochastic_pass(model, rng, model.candidates());
}

HyperState stochastic_pass(const HyperState& state, const Eigen::MatrixXd& theta,
                           const Eigen::VectorXd& y, std::uint64_t seed) {
  EvidenceModel model(theta, y);
  model.reset(state);
  Rng rng(seed);
  stochastic_pass(model, rng);
  return model.state();
}

HyperState expand_to_full(const HyperState& state, Eigen::Index n_terms) {
  if (state.size() == 0) throw std::invalid_argument("expand_to_full: empty model");
  const double fill = 1.0 / state.alpha.cwiseInverse().mean();
  HyperState full = state;
  full.active.resize(static_cast<std::size_t>(n_terms));
  std::iota(full.active.begin(), full.active.end(), Eigen::Index{0});
  full.alpha = Eigen::VectorXd::Constant(n_terms, fill);
  for (Eigen::Index j = 0; j < state.size(); ++j) full.alpha[state.active[j]] = state.alpha[j];
  return full;
}

OverflowResult overflow_prune(const HyperState& state, const Eigen::MatrixXd& theta,
                              const Eigen::VectorXd& y, const SolverConfig& cfg) {
  const Eigen::Index k = theta.rows();
  const Eigen::Index n_terms = theta.cols();
  OverflowResult out{state, true, 0, false};
  if (state.size() <= k) return out;

  HyperState full = expand_to_full(state, n_terms);

  const double floor = kSigma2FloorFrac * data_scale(y);
  TopDownOutcome td = run_top_down(theta, y, std::move(full), cfg,
                                   /*update_sigma2=*/false, floor, nullptr);
  out.iterations = td.iterations;
  out.state = std::move(td.state);
  if (out.state.size() > 0) {
    const Eigen::MatrixXd theta_a = select_columns(theta, out.state.active);
    const PosteriorGaussian post = posterior_moments(theta_a, y, out.state);
    try {
      out.state.sigma2 =
          std::max(sigma2_update(out.state, post.mu, post.sigma, theta_a, y), floor);
    } catch (const DegenerateUpdate&) {
      out.sigma2_degenerate = true;
    }
  }
  out.converged = td.converged && out.state.size() <= k;
  return out;
}

ReconstructionResult solve_top_down(const Eigen::MatrixXd& theta,
                                    const Eigen::VectorXd& y, const SolverConfig& cfg,
                                    const Basis& basis) {
  cfg.validate();
  check_shapes(theta, y, basis);
  if (is_zero(y)) return zero_data_result(theta, basis);
  ReconstructionResult r;
  const double scale = data_scale(y);
  const double n_terms = static_cast<double>(theta.cols());

  HyperState state;
  state.sigma2 = cfg.sigma2_init.value_or(cfg.fixed_sigma2_frac * scale);
  std::vector<double> alpha;
  for (Eigen::Index n = 0; n < theta.cols(); ++n) {
    const double norm2 = theta.col(n).squaredNorm();
    if (norm2 <= 0.0) continue;
    state.active.push_back(n);
    alpha.push_back(n_terms / (scale * norm2));
  }
  state.alpha = Eigen::Map<Eigen::VectorXd>(alpha.data(),
                                            static_cast<Eigen::Index>(alpha.size()));
  try {
    TopDownOutcome td = run_top_down(theta, y, std::move(state), cfg,
                                     /*update_sigma2=*/true, kSigma2FloorFrac * scale,
                                     cfg.record_trace ? &r.trace : nullptr);
    r.inner_iters = td.iterations;
    r.outer_iters = 1;
    r.converged = td.converged;
    r.sigma2_degenerate = td.sigma2_degenerate;
    finalize(theta, y, td.state, basis, r);
  } catch (const IllConditionedState& e) {
    return aborted_result(theta, basis, std::move(r), e.what());
  } catch (const NumericalDegeneracy& e) {
    return aborted_result(theta, basis, std::move(r), e.what());
  }
  return r;
}

ReconstructionResult solve_bottom_up(const Eigen::MatrixXd& theta,
                                     const Eigen::VectorXd& y, const SolverConfig& cfg,
                                     const Basis& basis) {
  cfg.validate();
  check_shapes(theta, y, basis);
  if (cfg.variant != Variant::kBottomUpFixed && cfg.variant != Variant::kBottomUpUpdate) {
    throw std::invalid_argument("solve_bottom_up: variant must be a bottom-up variant");
  }
  if (is_zero(y)) return zero_data_result(theta, basis);
  const bool update = cfg.variant == Variant::kBottomUpUpdate;
  const double scale = data_scale(y);
  const double floor = kSigma2FloorFrac * scale;
  ReconstructionResult r;
  r.outer_iters = 1;
  try {
    EvidenceModel model(theta, y);
    HyperState init;
    init.sigma2 = cfg.sigma2_init.value_or(cfg.fixed_sigma2_frac * scale);
    model.reset(init);
    const Eigen::Index n0 = seed_term(theta, y);
    if (n0 >= 0) model.apply(n0, model.candidate(n0));

    auto record = [&] {
      if (cfg.record_trace) {
        r.trace.push_back({model.log_evidence(), model.state().size(), model.state().sigma2});
      }
    };
    auto refit_sigma2 = [&]() -> double {
      const HyperState& s = model.state();
      const Eigen::MatrixXd theta_a = select_columns(theta, s.active);
      try {
        return std::max(sigma2_update(s, model.posterior().mu, model.posterior().sigma,
                                      theta_a, y),
                        floor);
      } catch (const DegenerateUpdate&) {
        r.sigma2_degenerate = true;
        return s.sigma2;
      }
    };
    record();

    const Eigen::Index cap = cfg.inner_cap(theta.cols());
    long accepted = 0;
    while (r.inner_iters < cap) {
      const std::vector<Candidate> cands = model.candidates();
      const Inspection ins = inspect(cands, cfg.inner_tol);
      if (ins.alpha_settled || ins.best < 0) {
        if (!update) {
          r.converged = true;
          break;
        }
        const double old_s2 = model.state().sigma2;
        const double new_s2 = refit_sigma2();
        if (std::abs(new_s2 - old_s2) <= cfg.inner_tol * old_s2) {
          r.converged = true;
          break;
        }
        model.set_sigma2(new_s2);
        record();
        ++r.inner_iters;
        continue;
      }
      model.apply(ins.best, cands[ins.best]);
      ++r.inner_iters;
      ++accepted;
      record();
      if (update && accepted % kBottomUpSigmaCadence == 0) {
        model.set_sigma2(refit_sigma2());
        record();
      }
    }
    finalize(theta, y, model.state(), basis, r);
  } catch (const IllConditionedState& e) {
    return aborted_result(theta, basis, std::move(r), e.what());
  } catch (const NumericalDegeneracy& e) {
    return aborted_result(theta, basis, std::move(r), e.what());
  }
  return r;
}

ReconstructionResult solve_bcs_so(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                                  const SolverConfig& cfg, const Basis& basis) {
  cfg.validate();
  check_shapes(theta, y, basis);
  if (cfg.variant != Variant::kSo && cfg.variant != Variant::kSoStar) {
    throw std::invalid_argument("solve_bcs_so: variant must be so or so_star");
  }
  if (is_zero(y)) return zero_data_result(theta, basis);
  const bool star = cfg.variant == Variant::kSoStar;
  const Eigen::Index k = theta.rows();
  const double floor = kSigma2FloorFrac * data_scale(y);
  Rng rng(derive_seed(cfg.seed, "bcs-so"));
  ReconstructionResult r;
  try {
    // One-term start: alpha = 1 on the best-correlated column, b = 0, sigma2
    // from the noise update evaluated on that model. The update needs a
    // posterior, which is taken at the empty-model estimate |y|^2 / K.
    HyperState state;
    const Eigen::Index n0 = seed_term(theta, y);
    state.sigma2 = y.squaredNorm() / static_cast<double>(k);
    if (n0 >= 0) {
      state.active = {n0};
      state.alpha = Eigen::VectorXd::Ones(1);
      const Eigen::MatrixXd theta_a = select_columns(theta, state.active);
      const PosteriorGaussian post = posterior_moments(theta_a, y, state);
      try {
        state.sigma2 = std::max(sigma2_update(state, post.mu, post.sigma, theta_a, y), floor);
      } catch (const DegenerateUpdate&) {
        r.sigma2_degenerate = true;
      }
    }
    EvidenceModel model(theta, y);
    model.reset(state);

    auto record = [&] {
      if (cfg.record_trace) {
        r.trace.push_back({model.log_evidence(), model.state().size(), model.state().sigma2});
      }
    };
    record();

    const Eigen::Index cap = cfg.inner_cap(theta.cols());
    std::optional<Eigen::VectorXd> previous_x;
    bool inner_converged = false;
    bool outer_converged = false;
    for (int outer = 1; outer <= cfg.max_outer_iters; ++outer) {
      r.outer_iters = outer;
      inner_converged = false;
      Eigen::Index last_accepted = -1;
      for (Eigen::Index pass = 0; pass < cap; ++pass) {
        const std::vector<Candidate> cands = model.candidates();
        const Inspection ins = inspect(cands, cfg.inner_tol);
        if (!(ins.max_gain > 0.0) ||
            (ins.alpha_settled &&
             (ins.max_gain < kSettledPassGain || last_accepted == 0))) {
          inner_converged = true;
          break;
        }
        last_accepted = stochastic_pass(model, rng, cands).accepted;
        ++r.inner_iters;
        record();
        if (model.state().size() > k) {
          OverflowResult ov = overflow_prune(model.state(), theta, y, cfg);
          r.overflow_pruned = true;
          r.inner_iters += ov.iterations;
          r.sigma2_degenerate = r.sigma2_degenerate || ov.sigma2_degenerate;
          r.converged = ov.converged;
          finalize(theta, y, ov.state, basis, r);
          return r;
        }
      }

      const Eigen::VectorXd x =
          basis.synthesize(full_coefficients(theta.cols(), model.state(), model.posterior().mu));
      if (previous_x) {
        const double ref = previous_x->squaredNorm();
        const double change = (x - *previous_x).squaredNorm();
        if (ref > 0.0 ? change / ref < cfg.outer_eps : change == 0.0) {
          outer_converged = true;
          break;
        }
      }
      previous_x = x;

      const HyperState& s = model.state();
      const Eigen::MatrixXd theta_a = select_columns(theta, s.active);
      double new_s2 = s.sigma2;
      try {
        new_s2 = std::max(
            sigma2_update(s, model.posterior().mu, model.posterior().sigma, theta_a, y),
            floor);
      } catch (const DegenerateUpdate&) {
        r.sigma2_degenerate = true;
      }
      if (star) model.set_b_param(new_s2);
      model.set_sigma2(new_s2);
      record();
    }
    r.converged = inner_converged && outer_converged;
    finalize(theta, y, model.state(), basis, r);
  } catch (const IllConditionedState& e) {
    return aborted_result(theta, basis, std::move(r), e.what());
  } catch (const NumericalDegeneracy& e) {
    return aborted_result(theta, basis, std::move(r), e.what());
  }
  return r;
}

ReconstructionResult solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                           const SolverConfig& cfg, const Basis& basis) {
  switch (cfg.variant) {
    case Variant::kTopDown:
      return solve_top_down(theta, y, cfg, basis);
    case Variant::kBottomUpFixed:
    case Variant::kBottomUpUpdate:
      return solve_bottom_up(theta, y, cfg, basis);
    case Variant::kSo:
    case Variant::kSoStar:
      return solve_bcs_so(theta, y, cfg, basis);
  }
  throw std::invalid_argument("solve: unknown variant");
}

ReconstructionResult solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                           const SolverConfig& cfg) {
  return solve(theta, y, cfg, Basis::identity(theta.cols()));
}

}  // namespace bcs
