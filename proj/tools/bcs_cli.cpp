// bcs: sweeps, surrogate wavelet cases, CSV reports and single reconstructions.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bcs/experiment.hpp"
#include "bcs/solvers.hpp"

namespace {

int run_sweep_cmd(const std::string& config, const std::string& out,
                  std::optional<int> threads, std::optional<std::uint64_t> seed) {
  bcs::SweepSpec spec = bcs::sweep_spec_from(bcs::Config::load(config));
  if (threads) spec.threads = *threads;
  if (seed) spec.master_seed = *seed;
  const auto records = bcs::run_sweep(spec, out);
  std::cerr << "wrote " << records.size() << " rows to " << out << '\n';
  return 0;
}

int run_surrogate_cmd(const std::string& config, const std::string& out,
                      std::optional<int> threads) {
  bcs::SweepSpec sweep;
  const bcs::SurrogateSpec spec = bcs::surrogate_spec_from(bcs::Config::load(config), sweep);
  if (threads) sweep.threads = *threads;
  const auto records = bcs::run_surrogate_cases(spec, sweep, out);
  std::cerr << "wrote " << records.size() << " rows to " << out << '\n';
  return 0;
}

int run_reconstruct_cmd(const std::string& theta_path, const std::string& y_path,
                        const std::string& variant, const std::string& basis_name,
                        std::uint64_t seed, const std::string& out) {
  const Eigen::MatrixXd theta = bcs::read_matrix(theta_path);
  const Eigen::MatrixXd y_mat = bcs::read_matrix(y_path);
  if (y_mat.cols() != 1 && y_mat.rows() != 1) {
    throw std::runtime_error("y must be a single row or column");
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y_mat.data(), y_mat.size());
  const bcs::BasisKind kind =
      basis_name == "haar" ? bcs::BasisKind::kHaar : bcs::BasisKind::kIdentity;
  const bcs::Basis basis(kind, theta.cols());

  bcs::SolverConfig cfg;
  cfg.variant = bcs::parse_variant(variant);
  cfg.seed = seed;
  const bcs::ReconstructionResult r = bcs::solve(theta, y, cfg, basis);

  Eigen::MatrixXd table(theta.cols(), 2);
  table.col(0) = r.x_hat.values;
  table.col(1) = r.error_bars;
  bcs::write_matrix(out, table);
  std::fprintf(stderr,
               "model_size=%zu sigma2=%.6g log_evidence=%.10g inner=%ld outer=%d "
               "converged=%d%s%s\n",
               r.active_set.size(), r.sigma2_final, r.final_log_evidence, r.inner_iters,
               r.outer_iters, r.converged ? 1 : 0, r.diagnostic.empty() ? "" : " diagnostic=",
               r.diagnostic.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian compressive sensing reconstruction and experiments"};
  app.require_subcommand(1);

  std::string config, out, csv, theta, y, variant = "so_star", basis = "identity";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::uint64_t solver_seed = 0;

  auto* sweep = app.add_subcommand("sweep", "Run a seeded trial grid and write CSV");
  sweep->add_option("--config", config, "key=value config file")->required();
  sweep->add_option("--out", out, "Output CSV")->required();
  sweep->add_option("--threads", threads, "Worker threads");
  sweep->add_option("--seed", seed, "Master seed");

  auto* surrogate = app.add_subcommand("surrogate", "Run the two-case wavelet pipeline");
  surrogate->add_option("--config", config, "key=value config file")->required();
  surrogate->add_option("--out", out, "Output CSV")->required();
  surrogate->add_option("--threads", threads, "Worker threads");

  auto* rep = app.add_subcommand("report", "Summarize a sweep CSV");
  rep->add_option("csv", csv, "CSV file")->required();

  auto* recon = app.add_subcommand("reconstruct", "Reconstruct a single instance");
  recon->add_option("--theta", theta, "K x N design matrix file")->required();
  recon->add_option("--y", y, "Measurement vector file")->required();
  recon->add_option("--variant", variant, "Solver variant");
  recon->add_option("--basis", basis, "identity or haar")
      ->check(CLI::IsMember({"identity", "haar"}));
  recon->add_option("--seed", solver_seed, "Solver seed");
  recon->add_option("--out", out, "Output file (x_hat and error bar per line)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) return run_sweep_cmd(config, out, threads, seed);
    if (*surrogate) return run_surrogate_cmd(config, out, threads);
    if (*rep) {
      std::cout << bcs::report(csv);
      return 0;
    }
    if (*recon) return run_reconstruct_cmd(theta, y, variant, basis, solver_seed, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
