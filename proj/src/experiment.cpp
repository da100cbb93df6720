#include "bcs/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "bcs/random.hpp"

namespace bcs {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool parse_ll(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(s.c_str(), &end, 10);
  return errno == 0 && end == s.c_str() + s.size();
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s.front() == '-') return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoull(s.c_str(), &end, 0);
  return errno == 0 && end == s.c_str() + s.size();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SpikeKind parse_spike_kind(const std::string& s, std::size_t line) {
  if (s == "uniform") return SpikeKind::kUniform;
  if (s == "gaussian" || s == "non-uniform" || s == "nonuniform") return SpikeKind::kGaussian;
  throw ParseError("spike_kind must be uniform or gaussian, got '" + s + "'", line);
}

BasisKind parse_basis(const std::string& s, std::size_t line) {
  if (s == "identity") return BasisKind::kIdentity;
  if (s == "haar") return BasisKind::kHaar;
  throw ParseError("basis must be identity or haar, got '" + s + "'", line);
}

SolverConfig cell_config(const SweepSpec& spec, Variant v, double outer_eps,
                         std::uint64_t seed) {
  SolverConfig cfg;
  cfg.variant = v;
  cfg.inner_tol = spec.inner_tol;
  cfg.outer_eps = outer_eps;
  cfg.fixed_sigma2_frac = spec.fixed_sigma2_frac;
  cfg.max_outer_iters = spec.max_outer_iters;
  cfg.seed = seed;
  return cfg;
}

// Solves one instance and scores it; failures become non-converged rows.
TrialRecord run_cell(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y,
                     const Basis& basis, const Signal& x_ref,
                     const SparseCoefficients& w_ref, const SolverConfig& cfg, bool timing,
                     bool error_bar_all) {
  TrialRecord rec;
  rec.n_len = basis.dim();
  rec.k_meas = theta.rows();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ReconstructionResult r = solve(theta, y, cfg, basis);
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_time_s = timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
    rec.recon_error = reconstruction_error(r.x_hat, x_ref);
    rec.mean_error_bar = error_bar_all ? r.mean_error_bar_all : r.mean_error_bar;
    try {
      rec.sparsity_ratio = sparsity_ratio(r.w_hat, w_ref);
    } catch (const std::invalid_argument&) {
      rec.sparsity_ratio = std::numeric_limits<double>::quiet_NaN();
    }
    rec.model_size = static_cast<Eigen::Index>(r.active_set.size());
    rec.log_evidence = r.final_log_evidence;
    rec.inner_iters = r.inner_iters;
    rec.outer_iters = r.outer_iters;
    rec.converged = r.converged && r.diagnostic.empty();
  } catch (const std::exception&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.recon_error = rec.mean_error_bar = rec.sparsity_ratio = rec.log_evidence = nan;
    rec.converged = false;
  }
  return rec;
}

auto record_key(const TrialRecord& r) {
  return std::tie(r.algorithm, r.k_meas, r.noise_pct);
}

void write_records(const std::string& path, std::span<const TrialRecord> records,
                   std::span<const double> thresholds) {
  write_csv_file(path, records, thresholds);
}

void check_writable(const std::string& path) {
  std::ofstream probe(path, std::ios::app);
  if (!probe) throw std::runtime_error("cannot open output file '" + path + "'");
}

}  // namespace

// ---- specs and config ----

void SweepSpec::validate() const {
  if (n_len < 1) throw std::invalid_argument("n_len must be positive");
  if (spike_count < 0 || spike_count > n_len) {
    throw std::invalid_argument("spike_count must be in [0, n_len]");
  }
  if (k_values.empty()) throw std::invalid_argument("k_values must not be empty");
  for (auto k : k_values)
    if (k < 1 || k > n_len) throw std::invalid_argument("every k must be in [1, n_len]");
  if (noise_pcts.empty()) throw std::invalid_argument("noise_pcts must not be empty");
  for (double p : noise_pcts)
    if (!(p >= 0.0)) throw std::invalid_argument("noise_pcts must be non-negative");
  if (algorithms.empty()) throw std::invalid_argument("algorithms must not be empty");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (basis == BasisKind::kHaar && !is_power_of_two(n_len)) {
    throw std::invalid_argument("haar basis needs n_len to be a power of two");
  }
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

void SurrogateSpec::validate() const {
  if (segment_len < 2 || total_len < segment_len) {
    throw std::invalid_argument("surrogate: need total_len >= segment_len >= 2");
  }
  if (total_len % segment_len != 0) {
    throw std::invalid_argument("surrogate: total_len must be divisible by segment_len");
  }
  if (!is_power_of_two(segment_len)) {
    throw std::invalid_argument("surrogate: segment_len must be a power of two");
  }
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("surrogate: bad sample rate");
  if (component_count < 1) throw std::invalid_argument("surrogate: component_count >= 1");
  if (!(denoise_tau > 0.0)) throw std::invalid_argument("surrogate: denoise_tau > 0");
  if (max_segments < 0) throw std::invalid_argument("surrogate: max_segments >= 0");
}

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line);
    cfg.entries_[key] = {trim(s.substr(eq + 1)), line};
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

const Config::Entry& Config::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ParseError("missing key '" + key + "'", 0);
  return it->second;
}

std::string Config::get_string(const std::string& key) const { return entry(key).value; }

long long Config::get_int(const std::string& key) const {
  const Entry& e = entry(key);
  long long v = 0;
  if (!parse_ll(e.value, v)) throw ParseError(key + ": expected an integer", e.line);
  return v;
}

std::uint64_t Config::get_uint64(const std::string& key) const {
  const Entry& e = entry(key);
  std::uint64_t v = 0;
  if (!parse_u64(e.value, v)) throw ParseError(key + ": expected an unsigned integer", e.line);
  return v;
}

double Config::get_double(const std::string& key) const {
  const Entry& e = entry(key);
  double v = 0.0;
  if (!parse_double(e.value, v)) throw ParseError(key + ": expected a number", e.line);
  return v;
}

bool Config::get_bool(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.value == "1" || e.value == "true" || e.value == "on" || e.value == "yes") return true;
  if (e.value == "0" || e.value == "false" || e.value == "off" || e.value == "no") return false;
  throw ParseError(key + ": expected a boolean", e.line);
}

std::vector<long long> Config::get_int_list(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<long long> out;
  for (const std::string& item : split(e.value, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      long long v = 0;
      if (!parse_ll(parts[0], v)) throw ParseError(key + ": bad integer '" + item + "'", e.line);
      out.push_back(v);
    } else if (parts.size() == 3) {
      long long a = 0, b = 0, step = 0;
      if (!parse_ll(parts[0], a) || !parse_ll(parts[1], b) || !parse_ll(parts[2], step) ||
          step <= 0 || b < a) {
        throw ParseError(key + ": bad range '" + item + "'", e.line);
      }
      for (long long v = a; v <= b; v += step) out.push_back(v);
    } else {
      throw ParseError(key + ": bad list item '" + item + "'", e.line);
    }
  }
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<double> out;
  for (const std::string& item : split(e.value, ',')) {
    double v = 0.0;
    if (!parse_double(item, v)) throw ParseError(key + ": bad number '" + item + "'", e.line);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  auto out = split(entry(key).value, ',');
  std::erase_if(out, [](const std::string& s) { return s.empty(); });
  return out;
}

namespace {

void apply_sweep_key(const Config& c, const std::string& key, SweepSpec& s) {
  if (key == "n_len") {
    s.n_len = c.get_int(key);
  } else if (key == "spike_count") {
    s.spike_count = c.get_int(key);
  } else if (key == "spike_kind") {
    s.spike_kind = parse_spike_kind(c.get_string(key), c.line(key));
  } else if (key == "k_values") {
    s.k_values.clear();
    for (long long k : c.get_int_list(key)) s.k_values.push_back(k);
  } else if (key == "noise_pcts") {
    s.noise_pcts = c.get_double_list(key);
  } else if (key == "algorithms") {
    s.algorithms.clear();
    for (const auto& name : c.get_string_list(key)) {
      try {
        s.algorithms.push_back(parse_variant(name));
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), c.line(key));
      }
    }
  } else if (key == "trials") {
    s.trials = static_cast<int>(c.get_int(key));
  } else if (key == "master_seed") {
    s.master_seed = c.get_uint64(key);
  } else if (key == "thresholds") {
    s.thresholds = c.get_double_list(key);
  } else if (key == "basis") {
    s.basis = parse_basis(c.get_string(key), c.line(key));
  } else if (key == "inner_tol") {
    s.inner_tol = c.get_double(key);
  } else if (key == "outer_eps") {
    s.outer_eps = c.get_double(key);
  } else if (key == "fixed_sigma2_frac") {
    s.fixed_sigma2_frac = c.get_double(key);
  } else if (key == "max_outer_iters") {
    s.max_outer_iters = static_cast<int>(c.get_int(key));
  } else if (key == "threads") {
    s.threads = static_cast<int>(c.get_int(key));
  } else if (key == "timing") {
    s.timing = c.get_bool(key);
  } else if (key == "error_bar_mean") {
    const std::string v = c.get_string(key);
    if (v != "nonzero" && v != "all") {
      throw ParseError("error_bar_mean must be nonzero or all, got '" + v + "'", c.line(key));
    }
    s.error_bar_all_samples = v == "all";
  } else {
    throw ParseError("unknown key '" + key + "'", c.line(key));
  }
}

}  // namespace

SweepSpec sweep_spec_from(const Config& cfg) {
  SweepSpec s;
  for (const auto& key : cfg.keys()) apply_sweep_key(cfg, key, s);
  if (s.algorithms.empty()) s.algorithms.assign(std::begin(kAllVariants), std::end(kAllVariants));
  return s;
}

SurrogateSpec surrogate_spec_from(const Config& cfg, SweepSpec& sweep) {
  SurrogateSpec s;
  for (const auto& key : cfg.keys()) {
    if (key == "total_len") {
      s.total_len = cfg.get_int(key);
    } else if (key == "segment_len") {
      s.segment_len = cfg.get_int(key);
    } else if (key == "sample_rate_hz") {
      s.sample_rate_hz = cfg.get_double(key);
    } else if (key == "component_count") {
      s.component_count = static_cast<int>(cfg.get_int(key));
    } else if (key == "denoise_tau") {
      s.denoise_tau = cfg.get_double(key);
    } else if (key == "seed") {
      s.seed = cfg.get_uint64(key);
    } else if (key == "max_segments") {
      s.max_segments = static_cast<int>(cfg.get_int(key));
    } else if (key == "case1_eps") {
      s.case1_eps = cfg.get_double(key);
    } else if (key == "case2_eps") {
      s.case2_eps = cfg.get_double(key);
    } else if (key == "k_values" || key == "algorithms" || key == "threads" ||
               key == "timing" || key == "inner_tol" || key == "fixed_sigma2_frac" ||
               key == "max_outer_iters" || key == "thresholds" || key == "error_bar_mean") {
      apply_sweep_key(cfg, key, sweep);
    } else {
      throw ParseError("unknown key '" + key + "'", cfg.line(key));
    }
  }
  if (sweep.algorithms.empty()) {
    sweep.algorithms.assign(std::begin(kAllVariants), std::end(kAllVariants));
  }
  return s;
}

// ---- parallel execution ----

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- sweeps ----

std::vector<TrialRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const Basis basis(spec.basis, spec.n_len);
  // The planted signal is shared by every trial; only Phi and the noise vary.
  const Signal spikes = gen_spikes(spec.n_len, spec.spike_count, spec.spike_kind,
                                   derive_seed(spec.master_seed, "signal"));
  const SparseCoefficients w_ref{spikes.values, spec.basis};
  const Signal x = basis_inverse(basis, w_ref);

  struct Cell {
    Variant variant;
    std::string name;
    Eigen::Index k;
    std::size_t noise_index;
    int trial;
  };
  std::vector<Cell> cells;
  for (Variant v : spec.algorithms)
    for (Eigen::Index k : spec.k_values)
      for (std::size_t ni = 0; ni < spec.noise_pcts.size(); ++ni)
        for (int t = 0; t < spec.trials; ++t)
          cells.push_back({v, std::string(variant_name(v)), k, ni, t});
  std::stable_sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) {
    return std::tie(a.name, a.k, spec.noise_pcts[a.noise_index], a.trial) <
           std::tie(b.name, b.k, spec.noise_pcts[b.noise_index], b.trial);
  });

  std::vector<TrialRecord> records(cells.size());
  parallel_for(cells.size(), spec.threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    const auto k = static_cast<std::uint64_t>(c.k);
    const auto t = static_cast<std::uint64_t>(c.trial);
    const std::uint64_t trial_seed = derive_seed(spec.master_seed, "trial", {k, t});
    const ProjectionMatrix phi = gen_projection(c.k, spec.n_len, derive_seed(trial_seed, "phi"));
    const double noise = spec.noise_pcts[c.noise_index];
    const Measurements y =
        compress(phi, x, noise, derive_seed(trial_seed, "noise", {c.noise_index}));
    const Eigen::MatrixXd theta = design_matrix(phi, basis);
    const SolverConfig cfg =
        cell_config(spec, c.variant, spec.outer_eps.value_or(default_outer_eps(noise)),
                    derive_seed(trial_seed, "solver", {c.noise_index}));
    TrialRecord rec =
        run_cell(theta, y.values, basis, x, w_ref, cfg, spec.timing, spec.error_bar_all_samples);
    rec.algorithm = c.name;
    rec.noise_pct = noise;
    rec.seed = trial_seed;
    records[i] = std::move(rec);
  });
  return records;
}

std::vector<TrialRecord> run_sweep(const SweepSpec& spec, const std::string& csv_out) {
  spec.validate();
  check_writable(csv_out);
  auto records = run_sweep(spec);
  write_records(csv_out, records, spec.thresholds);
  return records;
}

Signal surrogate_signal(const SurrogateSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "surrogate");
  std::uniform_real_distribution<double> freq(0.5, 20.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> decay(0.05, 0.5);     // 1/s
  std::uniform_real_distribution<double> period(5.0, 20.0);    // s between excitations
  std::uniform_real_distribution<double> amp(0.005, 0.02);

  Eigen::VectorXd clean = Eigen::VectorXd::Zero(spec.total_len);
  for (int c = 0; c < spec.component_count; ++c) {
    const double f = freq(rng), ph = phase(rng), d = decay(rng), p = period(rng),
                 a = amp(rng);
    const double offset = std::uniform_real_distribution<double>(0.0, p)(rng);
    for (Eigen::Index i = 0; i < spec.total_len; ++i) {
      const double t = static_cast<double>(i) / spec.sample_rate_hz;
      const double since = std::fmod(t + offset, p);
      clean[i] += a * std::exp(-d * since) * std::sin(2.0 * std::numbers::pi * f * t + ph);
    }
  }
  const double noise_std = 0.01 * rms(clean);
  std::normal_distribution<double> noise(0.0, 1.0);
  Signal x{clean};
  for (Eigen::Index i = 0; i < spec.total_len; ++i) x.values[i] += noise_std * noise(rng);
  return x;
}

std::vector<TrialRecord> run_surrogate_cases(const SurrogateSpec& spec,
                                             const SweepSpec& sweep) {
  spec.validate();
  if (sweep.k_values.empty() || sweep.algorithms.empty()) {
    throw std::invalid_argument("surrogate: k_values and algorithms must be set");
  }
  const Eigen::Index n = spec.segment_len;
  for (auto k : sweep.k_values)
    if (k < 1 || k > n) throw std::invalid_argument("surrogate: every k must be in [1, segment_len]");
  const Signal full = surrogate_signal(spec);
  const Basis haar = Basis::haar(n);
  Eigen::Index segments = spec.segment_count();
  if (spec.max_segments > 0) segments = std::min<Eigen::Index>(segments, spec.max_segments);

  struct Segment {
    Signal raw, denoised;
    SparseCoefficients w_d;
  };
  std::vector<Segment> segs;
  for (Eigen::Index s = 0; s < segments; ++s) {
    Signal raw{full.values.segment(s * n, n)};
    const ThresholdResult th = hard_threshold(basis_forward(haar, raw), spec.denoise_tau);
    segs.push_back({raw, basis_inverse(haar, th.coeffs), th.coeffs});
  }

  struct Cell {
    Variant variant;
    std::string name;
    Eigen::Index k;
    int case_id;
    Eigen::Index segment;
  };
  std::vector<Cell> cells;
  for (Variant v : sweep.algorithms)
    for (int cs = 1; cs <= 2; ++cs)
      for (Eigen::Index k : sweep.k_values)
        for (Eigen::Index s = 0; s < segments; ++s)
          cells.push_back({v, std::string(variant_name(v)) + "/case" + std::to_string(cs), k,
                           cs, s});
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.name, a.k, a.segment) < std::tie(b.name, b.k, b.segment);
  });

  // One projection matrix per K, reused for every segment.
  std::map<Eigen::Index, Eigen::MatrixXd> phis, thetas;
  for (Eigen::Index k : sweep.k_values) {
    if (phis.count(k)) continue;
    const ProjectionMatrix phi =
        gen_projection(k, n, derive_seed(spec.seed, "phi", {static_cast<std::uint64_t>(k)}));
    phis[k] = phi.entries;
    thetas[k] = design_matrix(phi, haar);
  }

  std::vector<TrialRecord> records(cells.size());
  parallel_for(cells.size(), sweep.threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    const Segment& seg = segs[static_cast<std::size_t>(c.segment)];
    const Signal& target = c.case_id == 1 ? seg.raw : seg.denoised;
    const Eigen::VectorXd y = phis.at(c.k) * target.values;
    const std::uint64_t seg_seed =
        derive_seed(spec.seed, "segment", {static_cast<std::uint64_t>(c.segment)});
    const SolverConfig cfg = cell_config(
        sweep, c.variant, c.case_id == 1 ? spec.case1_eps : spec.case2_eps,
        derive_seed(seg_seed, "solver",
                    {static_cast<std::uint64_t>(c.k), static_cast<std::uint64_t>(c.case_id)}));
    TrialRecord rec = run_cell(thetas.at(c.k), y, haar, target, seg.w_d, cfg, sweep.timing,
                               sweep.error_bar_all_samples);
    rec.algorithm = c.name;
    rec.noise_pct = 0.0;
    rec.seed = seg_seed;
    records[i] = std::move(rec);
  });
  return records;
}

std::vector<TrialRecord> run_surrogate_cases(const SurrogateSpec& spec,
                                             const SweepSpec& sweep,
                                             const std::string& csv_out) {
  check_writable(csv_out);
  auto records = run_surrogate_cases(spec, sweep);
  write_records(csv_out, records, sweep.thresholds);
  return records;
}

// ---- CSV and reporting ----

std::vector<SummaryRow> summarize(std::span<const TrialRecord> records,
                                  std::span<const double> thresholds) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<TrialRecord>> groups;
  for (const TrialRecord& r : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& s) {
      return std::tie(s.algorithm, s.k_meas, s.noise_pct) == record_key(r);
    });
    if (it == rows.end()) {
      rows.push_back({r.algorithm, r.k_meas, r.noise_pct, 0, {}, 0, 0, 0, 0});
      groups.emplace_back();
      it = rows.end() - 1;
    }
    groups[static_cast<std::size_t>(it - rows.begin())].push_back(r);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& grp = groups[g];
    SummaryRow& s = rows[g];
    s.trials = grp.size();
    for (double th : thresholds) s.acceptance.push_back(acceptance_rate(grp, th));
    const double n = static_cast<double>(grp.size());
    for (const auto& r : grp) {
      s.mean_recon_error += r.recon_error / n;
      s.mean_error_bar += r.mean_error_bar / n;
      s.mean_sparsity_ratio += r.sparsity_ratio / n;
      s.mean_wall_time_s += r.wall_time_s / n;
    }
  }
  return rows;
}

void write_csv(std::ostream& out, std::span<const TrialRecord> records,
               std::span<const double> thresholds) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.algorithm << ',' << r.k_meas << ',' << r.n_len << ',' << fmt_double(r.noise_pct)
        << ',' << r.seed << ',' << fmt_double(r.recon_error) << ','
        << fmt_double(r.mean_error_bar) << ',' << fmt_double(r.sparsity_ratio) << ','
        << r.model_size << ',' << fmt_double(r.log_evidence) << ',' << r.inner_iters << ','
        << r.outer_iters << ',' << (r.converged ? 1 : 0) << ',' << fmt_double(r.wall_time_s)
        << '\n';
  }
  for (const auto& s : summarize(records, thresholds)) {
    out << "# summary algorithm=" << s.algorithm << " k=" << s.k_meas
        << " noise_pct=" << fmt_double(s.noise_pct) << " trials=" << s.trials;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      out << " acc@" << fmt_double(thresholds[i]) << '=' << fmt_double(s.acceptance[i]);
    out << " mean_re=" << fmt_double(s.mean_recon_error)
        << " mean_error_bar=" << fmt_double(s.mean_error_bar)
        << " mean_sr=" << fmt_double(s.mean_sparsity_ratio)
        << " mean_wall_s=" << fmt_double(s.mean_wall_time_s) << '\n';
  }
}

void write_csv_file(const std::string& path, std::span<const TrialRecord> records,
                    std::span<const double> thresholds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  write_csv(out, records, thresholds);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<TrialRecord> read_csv(std::istream& in) {
  std::vector<TrialRecord> out;
  std::string raw;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw.front() == '#') continue;
    if (!header_seen) {
      if (raw != kCsvHeader) throw ParseError("unexpected CSV header", line);
      header_seen = true;
      continue;
    }
    const auto f = split(raw, ',');
    if (f.size() != 14) {
      throw ParseError("expected 14 fields, got " + std::to_string(f.size()), line);
    }
    TrialRecord r;
    long long ll = 0;
    auto need = [&](bool ok, const char* field) {
      if (!ok) throw ParseError(std::string("bad value for ") + field, line);
    };
    if (f[0].empty()) throw ParseError("empty algorithm", line);
    r.algorithm = f[0];
    need(parse_ll(f[1], ll), "k");
    r.k_meas = ll;
    need(parse_ll(f[2], ll), "n");
    r.n_len = ll;
    need(parse_double(f[3], r.noise_pct), "noise_pct");
    need(parse_u64(f[4], r.seed), "trial_seed");
    need(parse_double(f[5], r.recon_error), "recon_error");
    need(parse_double(f[6], r.mean_error_bar), "mean_error_bar");
    need(parse_double(f[7], r.sparsity_ratio), "sparsity_ratio");
    need(parse_ll(f[8], ll), "model_size");
    r.model_size = ll;
    need(parse_double(f[9], r.log_evidence), "log_evidence");
    need(parse_ll(f[10], ll), "inner_iters");
    r.inner_iters = static_cast<long>(ll);
    need(parse_ll(f[11], ll), "outer_iters");
    r.outer_iters = static_cast<int>(ll);
    need(f[12] == "0" || f[12] == "1", "converged");
    r.converged = f[12] == "1";
    need(parse_double(f[13], r.wall_time_s), "wall_time_s");
    out.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("missing CSV header", line);
  return out;
}

std::vector<TrialRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file '" + path + "'");
  return read_csv(in);
}

std::string format_report(std::span<const SummaryRow> rows,
                          std::span<const double> thresholds) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %5s %10s %6s", "algorithm", "k", "noise", "trials");
  out << buf;
  for (double th : thresholds) {
    std::snprintf(buf, sizeof buf, " %9s", ("acc@" + fmt_short(th)).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, " %11s %11s %9s %10s\n", "mean_re", "mean_ebar", "mean_sr",
                "mean_wall");
  out << buf;
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %5lld %10s %6zu", s.algorithm.c_str(),
                  static_cast<long long>(s.k_meas), fmt_short(s.noise_pct).c_str(), s.trials);
    out << buf;
    for (double a : s.acceptance) {
      std::snprintf(buf, sizeof buf, " %9.3f", a);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, " %11.4g %11.4g %9.4g %10.4g\n", s.mean_recon_error,
                  s.mean_error_bar, s.mean_sparsity_ratio, s.mean_wall_time_s);
    out << buf;
  }
  return out.str();
}

std::string report(const std::string& csv_path, std::span<const double> thresholds) {
  const auto records = read_csv_file(csv_path);
  if (records.empty()) throw ParseError(csv_path + ": no data rows", 0);
  return format_report(summarize(records, thresholds), thresholds);
}

// ---- plain-text matrices ----

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::istringstream ls(raw);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      double v = 0.0;
      if (!parse_double(tok, v)) throw ParseError(path + ": bad number '" + tok + "'", line);
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path + ": ragged row", line);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix", 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << fmt_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace bcs
