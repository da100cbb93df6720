#ifndef BCS_EXPERIMENT_HPP_
#define BCS_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bcs/metrics.hpp"
#include "bcs/signalgen.hpp"
#include "bcs/solvers.hpp"

namespace bcs {

inline constexpr const char* kCsvHeader =
    "algorithm,k,n,noise_pct,trial_seed,recon_error,mean_error_bar,sparsity_ratio,"
    "model_size,log_evidence,inner_iters,outer_iters,converged,wall_time_s";

// Configuration and CSV problems; `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct SweepSpec {
  Eigen::Index n_len = 512;
  Eigen::Index spike_count = 20;
  SpikeKind spike_kind = SpikeKind::kUniform;
  std::vector<Eigen::Index> k_values;
  std::vector<double> noise_pcts{1e-5};   // fraction of rms(Phi x)
  std::vector<Variant> algorithms;
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> thresholds{0.01, 0.1, 0.5};
  BasisKind basis = BasisKind::kIdentity;

  // Solver settings shared by every cell. outer_eps defaults per noise level.
  double inner_tol = 1e-6;
  std::optional<double> outer_eps;
  double fixed_sigma2_frac = 0.1;
  int max_outer_iters = 50;

  int threads = 1;
  bool timing = true;  // false writes 0 to wall_time_s
  // mean_error_bar over all samples instead of the nonzero ones.
  bool error_bar_all_samples = false;

  void validate() const;
};

struct SurrogateSpec {
  Eigen::Index total_len = 51200;
  Eigen::Index segment_len = 512;
  double sample_rate_hz = 100.0;
  int component_count = 6;
  double denoise_tau = 1e-4;
  std::uint64_t seed = 0;
  int max_segments = 0;      // 0 means all segments
  double case1_eps = 0.05;   // raw (non-sparse) segments
  double case2_eps = 1e-5;   // thresholded segments

  void validate() const;
  Eigen::Index segment_count() const { return total_len / segment_len; }
};

// Parsed `key = value` lines. Blank lines and lines starting with '#' are
// skipped; repeated keys keep the last value.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  // Source line of a key, 0 when it was set programmatically.
  std::size_t line(const std::string& key) const { return entry(key).line; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // Comma-separated; integer lists also accept `first:last:step`.
  std::vector<long long> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };
  const Entry& entry(const std::string& key) const;
  std::map<std::string, Entry> entries_;
};

// Unknown keys raise ParseError.
SweepSpec sweep_spec_from(const Config& cfg);
// The surrogate config also carries the sweep keys it uses (k_values,
// algorithms, threads, timing, inner_tol, fixed_sigma2_frac).
SurrogateSpec surrogate_spec_from(const Config& cfg, SweepSpec& sweep);

std::vector<TrialRecord> run_sweep(const SweepSpec& spec);
std::vector<TrialRecord> run_sweep(const SweepSpec& spec, const std::string& csv_out);

// Non-sparse stand-in for a structural acceleration record.
Signal surrogate_signal(const SurrogateSpec& spec);
// Case 1 rows are tagged "<algorithm>/case1" and scored against the raw
// segment; Case 2 rows "<algorithm>/case2" against the thresholded one.
std::vector<TrialRecord> run_surrogate_cases(const SurrogateSpec& spec,
                                             const SweepSpec& sweep);
std::vector<TrialRecord> run_surrogate_cases(const SurrogateSpec& spec,
                                             const SweepSpec& sweep,
                                             const std::string& csv_out);

struct SummaryRow {
  std::string algorithm;
  Eigen::Index k_meas = 0;
  double noise_pct = 0.0;
  std::size_t trials = 0;
  std::vector<double> acceptance;  // aligned with the thresholds used
  double mean_recon_error = 0.0;
  double mean_error_bar = 0.0;
  double mean_sparsity_ratio = 0.0;
  double mean_wall_time_s = 0.0;
};

// Groups by (algorithm, k, noise) in order of first appearance.
std::vector<SummaryRow> summarize(std::span<const TrialRecord> records,
                                  std::span<const double> thresholds);

void write_csv(std::ostream& out, std::span<const TrialRecord> records,
               std::span<const double> thresholds);
void write_csv_file(const std::string& path, std::span<const TrialRecord> records,
                    std::span<const double> thresholds);
// Data rows only; '#' summary lines are skipped.
std::vector<TrialRecord> read_csv(std::istream& in);
std::vector<TrialRecord> read_csv_file(const std::string& path);

std::string format_report(std::span<const SummaryRow> rows,
                          std::span<const double> thresholds);
std::string report(const std::string& csv_path,
                   std::span<const double> thresholds = kDefaultThresholds);

// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

// Whitespace-separated plain-text matrices, one row per line.
Eigen::MatrixXd read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace bcs

#endif  // BCS_EXPERIMENT_HPP_
