#pragma once

// Problem generators and the four experiment drivers: β sweep, measurement
// sweep, iteration count across solvers, and setup/iteration timing.

#include "foldsolve/analysis.hpp"
#include "foldsolve/random.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <thread>
#include <variant>

namespace foldsolve {

// ---------------------------------------------------------------------------
// Generators

enum class EnsembleKind { gaussian, partial_toeplitz, partial_circulant };
enum class EntryLaw { gaussian, rademacher };

inline const char *to_string(EnsembleKind k) {
  switch (k) {
  case EnsembleKind::gaussian:
    return "gaussian";
  case EnsembleKind::partial_toeplitz:
    return "partial-toeplitz";
  case EnsembleKind::partial_circulant:
    return "partial-circulant";
  }
  return "?";
}

inline EnsembleKind ensemble_kind_from_string(const std::string &s) {
  if (s == "gaussian")
    return EnsembleKind::gaussian;
  if (s == "partial-toeplitz")
    return EnsembleKind::partial_toeplitz;
  if (s == "partial-circulant")
    return EnsembleKind::partial_circulant;
  throw InvalidInput("unknown matrix ensemble '" + s + "'");
}

inline const char *to_string(EntryLaw l) {
  return l == EntryLaw::gaussian ? "gaussian" : "rademacher";
}

inline EntryLaw entry_law_from_string(const std::string &s) {
  if (s == "gaussian")
    return EntryLaw::gaussian;
  if (s == "rademacher")
    return EntryLaw::rademacher;
  throw InvalidInput("unknown entry law '" + s + "'");
}

struct MatrixEnsemble {
  EnsembleKind kind = EnsembleKind::gaussian;
  EntryLaw entry_law = EntryLaw::gaussian;
  Index m = 1;
  Index n = 1;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
};

inline double standard_normal(CounterRng &rng) {
  // Box-Muller, one draw per pair of uniforms.
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double draw_entry(CounterRng &rng, EntryLaw law) {
  if (law == EntryLaw::gaussian)
    return standard_normal(rng);
  return (rng() >> 63) ? 1.0 : -1.0;
}

/// k distinct indices from [0, n), uniformly, returned sorted.
inline IndexSet sample_without_replacement(CounterRng &rng, Index n, Index k) {
  IndexSet pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Entries scaled to variance 1/m. Structured ensembles keep m uniformly chosen
/// rows of the n×n Toeplitz or circulant matrix.
inline DenseMatrix gen_matrix(const MatrixEnsemble &e) {
  require(e.m >= 1 && e.n >= 1, "gen_matrix: dimensions must be positive");
  CounterRng rng(e.seed, stream_id(e.trial, Component::matrix));
  const double scale = 1.0 / std::sqrt(static_cast<double>(e.m));
  if (e.kind == EnsembleKind::gaussian) {
    DenseMatrix a(e.m, e.n);
    // Row-major fill so the draw order does not depend on storage order.
    for (Index i = 0; i < e.m; ++i)
      for (Index j = 0; j < e.n; ++j)
        a(i, j) = scale * draw_entry(rng, e.entry_law);
    return a;
  }
  require(e.m <= e.n, "gen_matrix: structured ensembles need m <= n");
  CounterRng row_rng(e.seed, stream_id(e.trial, Component::row_selection));
  const IndexSet rows = sample_without_replacement(row_rng, e.n, e.m);
  DenseMatrix a(e.m, e.n);
  if (e.kind == EnsembleKind::partial_circulant) {
    RealVector gen(e.n);
    for (Index j = 0; j < e.n; ++j)
      gen(j) = scale * draw_entry(rng, e.entry_law);
    // Row i of the circulant is the generator cyclically shifted right by i.
    for (Index r = 0; r < e.m; ++r)
      for (Index j = 0; j < e.n; ++j)
        a(r, j) = gen(((j - rows[static_cast<std::size_t>(r)]) % e.n + e.n) % e.n);
  } else {
    // T(i, j) = t_{i - j}, diagonals indexed by i - j + n - 1.
    RealVector diag(2 * e.n - 1);
    for (Index k = 0; k < diag.size(); ++k)
      diag(k) = scale * draw_entry(rng, e.entry_law);
    for (Index r = 0; r < e.m; ++r)
      for (Index j = 0; j < e.n; ++j)
        a(r, j) = diag(rows[static_cast<std::size_t>(r)] - j + e.n - 1);
  }
  return a;
}

/// Nonzero magnitudes uniform on [lo, hi] with independent random signs.
struct MagnitudeLaw {
  double lo = 0.5;
  double hi = 1.5;
};

inline RealVector gen_sparse_signal(Index n, Index s, std::uint64_t seed,
                                    const MagnitudeLaw &law = {}, std::uint64_t trial = 0) {
  require(s >= 0 && s <= n, "gen_sparse_signal: sparsity must lie in [0, n]");
  require(law.lo >= 0.0 && law.hi >= law.lo, "gen_sparse_signal: invalid magnitude range");
  CounterRng rng(seed, stream_id(trial, Component::signal));
  RealVector u = RealVector::Zero(n);
  for (Index i : sample_without_replacement(rng, n, s)) {
    const double mag = law.lo + (law.hi - law.lo) * rng.uniform01();
    u(i) = (rng() >> 63) ? mag : -mag;
  }
  return u;
}

/// Target ratios ‖v‖/‖u†‖ and ‖ξ‖/‖u†‖.
struct NoiseSpec {
  double pre_level = 0.0;
  double post_level = 0.0;
};

struct SignalParams {
  Index s = 1;
  MagnitudeLaw law;
};

namespace detail {

inline RealVector scaled_gaussian(CounterRng rng, Index len, double target_norm) {
  RealVector x(len);
  if (target_norm == 0.0)
    return RealVector::Zero(len);
  for (Index i = 0; i < len; ++i)
    x(i) = standard_normal(rng);
  return x * (target_norm / x.norm());
}

} // namespace detail

/// y = A(u† + v) + ξ with Gaussian noise directions rescaled to exact ratios.
inline ProblemInstance make_problem(const MatrixEnsemble &ens, const SignalParams &sig,
                                    const NoiseSpec &noise) {
  require(noise.pre_level >= 0.0 && noise.post_level >= 0.0,
          "make_problem: noise levels must be nonnegative");
  ProblemInstance p;
  p.matrix = gen_matrix(ens);
  RealVector truth = gen_sparse_signal(ens.n, sig.s, ens.seed, sig.law, ens.trial);
  const double norm_u = truth.norm();
  RealVector v = detail::scaled_gaussian(
      CounterRng(ens.seed, stream_id(ens.trial, Component::pre_noise)), ens.n,
      noise.pre_level * norm_u);
  RealVector xi = detail::scaled_gaussian(
      CounterRng(ens.seed, stream_id(ens.trial, Component::post_noise)), ens.m,
      noise.post_level * norm_u);
  p.observation = p.matrix * (truth + v) + xi;
  p.ground_truth = std::move(truth);
  p.pre_noise = std::move(v);
  p.post_noise = std::move(xi);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Parameter tuning

struct AlphaTuning {
  double alpha = 0.0;
  Index support_size = -1;
  bool found = false;
  int evaluations = 0;
  /// Upper end of the search bracket (smallest α with u = 0 stationary).
  double alpha_zero = 0.0;
};

/// Smallest α for which u = 0 is a fixed point of the augmented iteration with
/// step mu: ‖μ∇F_β(0)‖_∞ = τ_μ(α).
inline double alpha_zero_threshold(const ProblemInstance &p, double beta, double q, double mu,
                                   const SvdFactors &svd) {
  // ∇F_β(0) = Bᵀ(−y_β) = Aᵀ(A v(0) − y).
  const RealVector v0 = v_of_u(p.matrix, svd, p.observation, RealVector::Zero(p.cols()), beta);
  const double g = mu * (p.matrix.transpose() * (p.matrix * v0 - p.observation)).cwiseAbs().maxCoeff();
  if (q == 1.0)
    return g / mu;
  const double cq = (2.0 - q) / (2.0 - 2.0 * q);
  return q / (2.0 * mu * (1.0 - q)) * std::pow(g / cq, 2.0 - q);
}

/// Largest α (bisection in log α over [1e-6 α_zero, α_zero]) whose solution
/// has exactly target_support nonzeros. Each evaluation runs at most 20000
/// iterations. When no evaluated α matches,
/// found is false and alpha/support_size hold the closest evaluated point.
/// A seed α, when given, is tested first and accepted if it already matches.
inline AlphaTuning tune_alpha_for_support(const ProblemInstance &p, SolverKind kind,
                                          const SolverConfig &tmpl, Index target_support,
                                          int max_evaluations = 48,
                                          std::optional<double> seed_alpha = std::nullopt) {
  require(target_support >= 0 && target_support <= p.cols(),
          "tune_alpha_for_support: target support out of range");
  const SvdFactors svd = compute_svd(p.matrix);
  const double norm_a = svd.singular_values(0);
  const double mu_aug = 0.99 / augmented_lipschitz(norm_a, tmpl.beta);
  AlphaTuning out;
  out.alpha_zero = alpha_zero_threshold(p, tmpl.beta, tmpl.q, mu_aug, svd);

  auto support_at = [&](double alpha) {
    SolverConfig cfg = tmpl;
    cfg.alpha = alpha;
    cfg.reference.reset();
    cfg.record_objective = false;
    cfg.record_signs = false;
    cfg.max_iters = std::min<Index>(cfg.max_iters, 20000);
    ++out.evaluations;
    const SolverResult r = solve(kind, p, cfg);
    return static_cast<Index>(support_of(r.u).size());
  };
  auto consider = [&](double alpha, Index support) {
    const Index gap = std::abs(support - target_support);
    const Index best_gap = out.support_size < 0 ? std::numeric_limits<Index>::max()
                                                : std::abs(out.support_size - target_support);
    if (gap < best_gap || (gap == best_gap && alpha > out.alpha)) {
      out.alpha = alpha;
      out.support_size = support;
    }
    if (support == target_support)
      out.found = true;
  };

  if (seed_alpha) {
    consider(*seed_alpha, support_at(*seed_alpha));
    if (out.found)
      return out;
  }
  double hi = out.alpha_zero;
  Index s_hi = support_at(hi);
  for (int k = 0; k < 8 && s_hi > 0; ++k)
    s_hi = support_at(hi *= 2.0);
  consider(hi, s_hi);
  if (target_support == s_hi)
    return out;
  // The lower end is not evaluated: runs at tiny α are slow and dense, and
  // bisection only needs it as a bracket.
  double lo = 1e-6 * out.alpha_zero;
  while (out.evaluations < max_evaluations && hi / lo > 1.0 + 1e-9) {
    const double mid = std::sqrt(lo * hi);
    const Index s_mid = support_at(mid);
    consider(mid, s_mid);
    if (s_mid >= target_support)
      lo = mid;
    else
      hi = mid;
    // Once matched, keep shrinking [lo, hi] only far enough to pin the
    // largest matching α to three significant digits.
    if (out.found && hi / lo < 1.001)
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment specification and records

enum class ExperimentName { vary_beta, vary_m, iteration_count, timing };

inline const char *to_string(ExperimentName e) {
  switch (e) {
  case ExperimentName::vary_beta:
    return "vary-beta";
  case ExperimentName::vary_m:
    return "vary-m";
  case ExperimentName::iteration_count:
    return "iteration-count";
  case ExperimentName::timing:
    return "timing";
  }
  return "?";
}

inline ExperimentName experiment_name_from_string(const std::string &s) {
  if (s == "vary-beta")
    return ExperimentName::vary_beta;
  if (s == "vary-m")
    return ExperimentName::vary_m;
  if (s == "iteration-count")
    return ExperimentName::iteration_count;
  if (s == "timing")
    return ExperimentName::timing;
  throw InvalidInput("unknown experiment '" + s + "'");
}

struct ExperimentSpec {
  ExperimentName name = ExperimentName::vary_beta;
  Index m = 200;
  Index n = 600;
  Index s = 20;
  double q = 0.5;
  double noise_level = 0.1;
  EnsembleKind ensemble = EnsembleKind::gaussian;
  EntryLaw entry_law = EntryLaw::gaussian;
  std::vector<double> betas{0.05, 0.2, 1.0, 5.0};
  std::vector<Index> ms{100, 200, 300, 400};
  Index trials = 1;
  std::uint64_t seed = 1;
  double beta = 0.2;
  /// Fixed α (timing); tuned to the target support otherwise.
  double alpha = 0.02;
  /// Fixed step (timing); the other experiments derive μ from ‖A‖ and β.
  double mu = 0.1;
  /// Target support of the tuned solution; 0 selects s.
  Index target_support = 0;
  double err_target = 1e-6;
  double tail_fraction = 0.3;
  Index iterations = 50;
  Index timing_repeats = 3;
  Index max_iters = 100000;
  double stop_tol = 1e-10;
  double inner_tol = 1e-8;

  Index effective_target() const { return target_support > 0 ? target_support : s; }

  void validate() const {
    require(trials >= 1, "experiment: trials must be at least 1");
    require(m >= 1 && n >= 1 && s >= 0 && s <= n, "experiment: invalid dimensions");
    require(q > 0.0 && q <= 1.0, "experiment: q must lie in (0, 1]");
    require(noise_level >= 0.0, "experiment: noise level must be nonnegative");
    if (name == ExperimentName::vary_beta)
      require(!betas.empty(), "experiment: beta grid must be nonempty");
    if (name == ExperimentName::vary_m || name == ExperimentName::timing) {
      require(!ms.empty(), "experiment: m grid must be nonempty");
      for (Index mm : ms)
        require(mm >= 1, "experiment: m grid entries must be positive");
    }
    require(iterations >= 1 && timing_repeats >= 1, "experiment: iteration counts must be positive");
  }

  /// Acceptance-scale preset per experiment.
  static ExperimentSpec preset(ExperimentName name) {
    ExperimentSpec e;
    e.name = name;
    switch (name) {
    case ExperimentName::vary_beta:
      break;
    case ExperimentName::vary_m:
      e.trials = 5;
      break;
    case ExperimentName::iteration_count:
      e.m = 100;
      e.n = 500;
      e.s = 14;
      e.target_support = 13;
      e.err_target = 1e-4;
      break;
    case ExperimentName::timing:
      e.n = 1000;
      e.s = 20;
      e.ms = {250, 500, 1000, 2000};
      e.trials = 5;
      break;
    }
    return e;
  }

  /// Full-size timing grid: n = 5000, 100-sparse, m from 1000 to 8000, 20 trials.
  static ExperimentSpec paper_scale_timing() {
    ExperimentSpec e = preset(ExperimentName::timing);
    e.n = 5000;
    e.s = 100;
    e.ms = {1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000};
    e.trials = 20;
    return e;
  }
};

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string &name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
      throw InvalidInput("table has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }

  double number(std::size_t row, const std::string &name) const {
    const Cell &c = rows.at(row).at(column(name));
    if (const auto *d = std::get_if<double>(&c))
      return *d;
    if (const auto *i = std::get_if<std::int64_t>(&c))
      return static_cast<double>(*i);
    throw InvalidInput("column '" + name + "' is not numeric");
  }

  std::string text(std::size_t row, const std::string &name) const {
    return std::get<std::string>(rows.at(row).at(column(name)));
  }
};

struct RunRecord {
  ExperimentSpec spec;
  /// One row per (trial, grid point, solver).
  Table trials;
  /// Error-versus-prox-call curves.
  Table curves;
  /// Per grid point statistics over trials (mean, min, max, median).
  Table aggregate;
  /// Scalar findings (ratios, slopes) keyed by name.
  std::map<std::string, double> findings;
  /// Wall-clock measurements; not reproducible across runs.
  Table wall;
  Table wall_aggregate;
  std::map<std::string, double> wall_findings;
};

// ---------------------------------------------------------------------------
// Shared helpers

inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("FOLDSOLVE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1)
      n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Results
/// must be written to per-index slots; the caller reduces them in order.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)> &body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i; (i = next++) < count;)
            body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

struct Stats {
  double mean = 0.0, min = 0.0, max = 0.0, median = 0.0;
};

inline Stats summarize(std::vector<double> xs) {
  Stats s;
  if (xs.empty())
    return {std::nan(""), std::nan(""), std::nan(""), std::nan("")};
  std::sort(xs.begin(), xs.end());
  s.min = xs.front();
  s.max = xs.back();
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const std::size_t h = xs.size() / 2;
  s.median = xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
  return s;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

/// First record whose error is at or below target; −1 if none.
inline std::int64_t first_reaching(const IterationTrace &trace, double target,
                                   bool count_prox_calls) {
  for (const auto &rec : trace.records)
    if (std::isfinite(rec.err_to_ref) && rec.err_to_ref <= target)
      return count_prox_calls ? rec.prox_calls : static_cast<std::int64_t>(rec.iter);
  return -1;
}

inline double safe_empirical_rate(const IterationTrace &trace, double tail_fraction) {
  try {
    return empirical_rate(trace, tail_fraction);
  } catch (const UndefinedRate &) {
    return std::nan("");
  }
}

inline ProblemInstance experiment_problem(const ExperimentSpec &spec, Index m, Index n,
                                          std::uint64_t trial) {
  MatrixEnsemble ens{spec.ensemble, spec.entry_law, m, n, spec.seed, trial};
  return make_problem(ens, {spec.s, {}}, {spec.noise_level, spec.noise_level});
}

inline SolverConfig experiment_config(const ExperimentSpec &spec, double beta, double mu) {
  SolverConfig cfg;
  cfg.alpha = spec.alpha;
  cfg.beta = beta;
  cfg.q = spec.q;
  cfg.mu = mu;
  cfg.max_iters = spec.max_iters;
  cfg.stop_tol = spec.stop_tol;
  cfg.inner_tol = spec.inner_tol;
  return cfg;
}

inline void append_curve(Table &curves, std::int64_t trial, const std::string &label,
                         double grid_value, const IterationTrace &trace) {
  for (const auto &rec : trace.records)
    curves.rows.push_back({trial, label, grid_value, static_cast<std::int64_t>(rec.iter),
                           static_cast<std::int64_t>(rec.prox_calls), rec.err_to_ref});
}

inline Table curve_table() {
  return {{"trial", "solver", "grid_value", "iter", "prox_calls", "err_to_ref"}, {}};
}

// ---------------------------------------------------------------------------
// Experiment drivers

struct TunedRun {
  AlphaTuning tuning;
  SolverConfig config;
  SolverResult result;
  double empirical = std::nan("");
  std::optional<TheoryReport> theory;
};

inline TunedRun tuned_run(SolverKind kind, const ProblemInstance &p, SolverConfig cfg,
                          Index target, double tail_fraction,
                          std::optional<double> seed_alpha = std::nullopt) {
  TunedRun run;
  SolverConfig tuning_cfg = cfg;
  tuning_cfg.stop_tol = std::max(cfg.stop_tol, 1e-9);
  run.tuning = tune_alpha_for_support(p, kind, tuning_cfg, target, 48, seed_alpha);
  cfg.alpha = run.tuning.alpha;
  run.config = cfg;
  cfg.reference = reference_point(kind, p, cfg);
  run.result = solve(kind, p, cfg);
  run.empirical = safe_empirical_rate(run.result.trace, tail_fraction);
  try {
    if (kind == SolverKind::augmented)
      run.theory = augmented_theory(p.matrix, cfg, *cfg.reference);
    else if (kind == SolverKind::infconv)
      run.theory = infconv_theory(p.matrix, cfg, *cfg.reference);
  } catch (const UndefinedRate &) {
  }
  run.config = cfg;
  return run;
}

/// Sweep β with μ = 0.99 (‖A‖^{-2} + β^{-1}); α tuned to the target support.
inline RunRecord experiment_vary_beta(const ExperimentSpec &spec) {
  spec.validate();
  RunRecord rec;
  rec.spec = spec;
  rec.curves = curve_table();
  rec.trials.columns = {"trial", "beta", "mu", "alpha", "alpha_found", "support", "iters_to_target",
                        "iterations", "empirical_rate", "theoretical_rate", "admissible", "status"};
  const std::size_t nb = spec.betas.size();
  std::vector<TunedRun> runs(static_cast<std::size_t>(spec.trials) * nb);
  parallel_for(runs.size(), [&](std::size_t idx) {
    const auto trial = static_cast<std::uint64_t>(idx / nb);
    const double beta = spec.betas[idx % nb];
    const ProblemInstance p = experiment_problem(spec, spec.m, spec.n, trial);
    const double norm_a = spectral_norm(p.matrix);
    const double mu = 0.99 * (1.0 / (norm_a * norm_a) + 1.0 / beta);
    runs[idx] = tuned_run(SolverKind::augmented, p, experiment_config(spec, beta, mu),
                          spec.effective_target(), spec.tail_fraction);
  });
  for (std::size_t idx = 0; idx < runs.size(); ++idx) {
    const TunedRun &r = runs[idx];
    const auto trial = static_cast<std::int64_t>(idx / nb);
    const double beta = spec.betas[idx % nb];
    rec.trials.rows.push_back(
        {trial, beta, r.config.mu, r.config.alpha, std::int64_t{r.tuning.found},
         static_cast<std::int64_t>(support_of(r.result.u).size()),
         first_reaching(r.result.trace, spec.err_target, false),
         static_cast<std::int64_t>(r.result.iterations()), r.empirical,
         r.theory ? r.theory->rate.constant : std::nan(""),
         std::int64_t{r.theory && r.theory->rate.admissible}, std::string(to_string(r.result.status))});
    append_curve(rec.curves, trial, "augmented", beta, r.result.trace);
  }
  rec.aggregate.columns = {"beta", "mean_iters_to_target", "min_iters_to_target",
                           "max_iters_to_target", "median_empirical_rate"};
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> iters, rates;
    for (std::size_t t = 0; t < static_cast<std::size_t>(spec.trials); ++t) {
      const std::size_t row = t * nb + b;
      const double it = rec.trials.number(row, "iters_to_target");
      if (it >= 0)
        iters.push_back(it);
      rates.push_back(rec.trials.number(row, "empirical_rate"));
    }
    const Stats si = summarize(iters);
    rec.aggregate.rows.push_back({spec.betas[b], si.mean, si.min, si.max, summarize(rates).median});
  }
  const auto smallest = std::min_element(spec.betas.begin(), spec.betas.end()) - spec.betas.begin();
  const auto largest = std::max_element(spec.betas.begin(), spec.betas.end()) - spec.betas.begin();
  const double it_small = rec.aggregate.number(static_cast<std::size_t>(smallest), "mean_iters_to_target");
  const double it_large = rec.aggregate.number(static_cast<std::size_t>(largest), "mean_iters_to_target");
  rec.findings["iters_smallest_beta"] = it_small;
  rec.findings["iters_largest_beta"] = it_large;
  rec.findings["speedup_largest_over_smallest"] = it_large / it_small;
  return rec;
}

/// Sweep the number of measurements m at fixed n and sparsity.
inline RunRecord experiment_vary_m(const ExperimentSpec &spec) {
  spec.validate();
  RunRecord rec;
  rec.spec = spec;
  rec.curves = curve_table();
  rec.trials.columns = {"trial", "m", "mu", "alpha", "alpha_found", "support", "iterations",
                        "empirical_rate", "theoretical_rate", "admissible", "status"};
  const std::size_t nm = spec.ms.size();
  std::vector<TunedRun> runs(static_cast<std::size_t>(spec.trials) * nm);
  parallel_for(runs.size(), [&](std::size_t idx) {
    const auto trial = static_cast<std::uint64_t>(idx / nm);
    const Index m = spec.ms[idx % nm];
    const ProblemInstance p = experiment_problem(spec, m, spec.n, trial);
    const double norm_a = spectral_norm(p.matrix);
    const double mu = 0.99 * (1.0 / (norm_a * norm_a) + 1.0 / spec.beta);
    runs[idx] = tuned_run(SolverKind::augmented, p, experiment_config(spec, spec.beta, mu),
                          spec.effective_target(), spec.tail_fraction);
  });
  for (std::size_t idx = 0; idx < runs.size(); ++idx) {
    const TunedRun &r = runs[idx];
    const auto trial = static_cast<std::int64_t>(idx / nm);
    const Index m = spec.ms[idx % nm];
    rec.trials.rows.push_back(
        {trial, static_cast<std::int64_t>(m), r.config.mu, r.config.alpha,
         std::int64_t{r.tuning.found}, static_cast<std::int64_t>(support_of(r.result.u).size()),
         static_cast<std::int64_t>(r.result.iterations()), r.empirical,
         r.theory ? r.theory->rate.constant : std::nan(""),
         std::int64_t{r.theory && r.theory->rate.admissible}, std::string(to_string(r.result.status))});
    append_curve(rec.curves, trial, "augmented", static_cast<double>(m), r.result.trace);
  }
  rec.aggregate.columns = {"m", "median_empirical_rate", "mean_empirical_rate",
                           "min_empirical_rate", "max_empirical_rate", "median_theoretical_rate"};
  for (std::size_t j = 0; j < nm; ++j) {
    std::vector<double> rates, theory;
    for (std::size_t t = 0; t < static_cast<std::size_t>(spec.trials); ++t) {
      const std::size_t row = t * nm + j;
      const double r = rec.trials.number(row, "empirical_rate");
      if (std::isfinite(r))
        rates.push_back(r);
      const double th = rec.trials.number(row, "theoretical_rate");
      if (std::isfinite(th))
        theory.push_back(th);
    }
    const Stats s = summarize(rates);
    rec.aggregate.rows.push_back({static_cast<std::int64_t>(spec.ms[j]), s.median, s.mean, s.min,
                                  s.max, summarize(theory).median});
  }
  double worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < nm; ++j)
    worst_increase =
        std::max(worst_increase, rec.aggregate.number(j, "median_empirical_rate") -
                                     rec.aggregate.number(j - 1, "median_empirical_rate"));
  rec.findings["max_rate_increase_between_consecutive_m"] = worst_increase;
  return rec;
}

/// All three solvers tuned to the same target support; error against prox calls.
inline RunRecord experiment_iteration_count(const ExperimentSpec &spec) {
  spec.validate();
  RunRecord rec;
  rec.spec = spec;
  rec.curves = curve_table();
  rec.trials.columns = {"trial", "solver", "mu", "alpha", "alpha_found", "support",
                        "prox_calls_to_target", "prox_calls_total", "empirical_rate", "status"};
  const std::array<SolverKind, 3> kinds{SolverKind::alternating, SolverKind::augmented,
                                        SolverKind::infconv};
  std::vector<TunedRun> runs(static_cast<std::size_t>(spec.trials) * kinds.size());
  // All three solvers address the same objective, so the augmented α seeds
  // the other two searches.
  parallel_for(static_cast<std::size_t>(spec.trials), [&](std::size_t t) {
    const ProblemInstance p = experiment_problem(spec, spec.m, spec.n, t);
    const double norm_a = spectral_norm(p.matrix);
    auto config_for = [&](SolverKind kind) {
      double mu = 0.99 / (norm_a * norm_a);
      if (kind == SolverKind::augmented)
        mu = 0.99 * (1.0 / (norm_a * norm_a) + 1.0 / spec.beta);
      SolverConfig cfg = experiment_config(spec, spec.beta, mu);
      cfg.inner_mu = 0.99 / (norm_a * norm_a);
      return cfg;
    };
    TunedRun &aug = runs[t * kinds.size() + 1];
    aug = tuned_run(SolverKind::augmented, p, config_for(SolverKind::augmented),
                    spec.effective_target(), spec.tail_fraction);
    for (std::size_t k : {std::size_t{0}, std::size_t{2}})
      runs[t * kinds.size() + k] = tuned_run(kinds[k], p, config_for(kinds[k]), spec.effective_target(),
                                             spec.tail_fraction, aug.config.alpha);
  });
  for (std::size_t idx = 0; idx < runs.size(); ++idx) {
    const TunedRun &r = runs[idx];
    const auto trial = static_cast<std::int64_t>(idx / kinds.size());
    const SolverKind kind = kinds[idx % kinds.size()];
    rec.trials.rows.push_back(
        {trial, std::string(to_string(kind)), r.config.mu, r.config.alpha,
         std::int64_t{r.tuning.found}, static_cast<std::int64_t>(support_of(r.result.u).size()),
         first_reaching(r.result.trace, spec.err_target, true),
         static_cast<std::int64_t>(r.result.prox_calls()), r.empirical,
         std::string(to_string(r.result.status))});
    append_curve(rec.curves, trial, to_string(kind), 0.0, r.result.trace);
  }
  rec.aggregate.columns = {"solver", "mean_prox_calls_to_target", "min_prox_calls_to_target",
                           "max_prox_calls_to_target"};
  std::array<double, 3> means{};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    std::vector<double> calls;
    for (std::size_t t = 0; t < static_cast<std::size_t>(spec.trials); ++t) {
      const double c = rec.trials.number(t * kinds.size() + k, "prox_calls_to_target");
      if (c >= 0)
        calls.push_back(c);
    }
    const Stats s = summarize(calls);
    means[k] = s.mean;
    rec.aggregate.rows.push_back({std::string(to_string(kinds[k])), s.mean, s.min, s.max});
  }
  rec.findings["am_over_augmented"] = means[0] / means[1];
  rec.findings["am_over_infconv"] = means[0] / means[2];
  return rec;
}

/// Fingerprint of a generated instance (bytes of A and y).
inline std::uint64_t instance_checksum(const ProblemInstance &p) {
  std::uint64_t h = fnv1a(p.matrix.data(), sizeof(double) * static_cast<std::size_t>(p.matrix.size()));
  return fnv1a(p.observation.data(), sizeof(double) * static_cast<std::size_t>(p.observation.size()), h);
}

/// Wall time of a fixed number of iterations per m, median over repeats.
/// The augmented time includes building B_β. Measured times go to the wall
/// tables; the trial table only holds reproducible content.
inline RunRecord experiment_timing(const ExperimentSpec &spec) {
  spec.validate();
  RunRecord rec;
  rec.spec = spec;
  rec.curves = curve_table();
  rec.trials.columns = {"trial", "m", "solver", "iterations", "status", "instance_checksum"};
  rec.wall.columns = {"trial", "m", "solver", "seconds", "setup_seconds"};
  SolverConfig cfg = experiment_config(spec, spec.beta, spec.mu);
  cfg.max_iters = spec.iterations;
  cfg.fixed_budget = true;
  cfg.record_objective = false;
  cfg.record_signs = false;
  // Serial on purpose: concurrent trials would contend for the same cores.
  for (Index m : spec.ms) {
    for (Index t = 0; t < spec.trials; ++t) {
      const ProblemInstance p = experiment_problem(spec, m, spec.n, static_cast<std::uint64_t>(t));
      const auto checksum = static_cast<std::int64_t>(instance_checksum(p) >> 1);
      // The infconv step-size check needs ‖A‖, which the iteration itself does
      // not; keep it out of the timed region.
      const double norm_a = spectral_norm(p.matrix);
      for (SolverKind kind : {SolverKind::augmented, SolverKind::infconv}) {
        std::vector<double> secs, setups;
        SolverResult last;
        for (Index rep = 0; rep < spec.timing_repeats; ++rep) {
          const auto start = detail::Clock::now();
          last = kind == SolverKind::infconv ? solve_infconv(p, cfg, norm_a) : solve(kind, p, cfg);
          secs.push_back(detail::seconds_since(start));
          setups.push_back(last.setup_seconds);
        }
        rec.trials.rows.push_back({static_cast<std::int64_t>(t), static_cast<std::int64_t>(m),
                                   std::string(to_string(kind)),
                                   static_cast<std::int64_t>(last.iterations()),
                                   std::string(to_string(last.status)), checksum});
        rec.wall.rows.push_back({static_cast<std::int64_t>(t), static_cast<std::int64_t>(m),
                                 std::string(to_string(kind)), summarize(secs).median,
                                 summarize(setups).median});
      }
    }
  }
  rec.wall_aggregate.columns = {"m", "solver", "mean_seconds", "min_seconds", "max_seconds",
                                "mean_setup_seconds"};
  std::map<std::string, std::vector<double>> mean_by_solver;
  std::vector<double> ms_d;
  for (Index m : spec.ms) {
    ms_d.push_back(static_cast<double>(m));
    for (const char *solver : {"augmented", "infconv"}) {
      std::vector<double> secs, setups;
      for (std::size_t r = 0; r < rec.wall.rows.size(); ++r)
        if (rec.wall.number(r, "m") == static_cast<double>(m) && rec.wall.text(r, "solver") == solver) {
          secs.push_back(rec.wall.number(r, "seconds"));
          setups.push_back(rec.wall.number(r, "setup_seconds"));
        }
      const Stats s = summarize(secs);
      mean_by_solver[solver].push_back(s.mean);
      rec.wall_aggregate.rows.push_back({static_cast<std::int64_t>(m), std::string(solver), s.mean,
                                         s.min, s.max, summarize(setups).mean});
    }
  }
  if (ms_d.size() >= 2) {
    rec.wall_findings["augmented_loglog_slope"] = loglog_slope(ms_d, mean_by_solver["augmented"]);
    rec.wall_findings["infconv_loglog_slope"] = loglog_slope(ms_d, mean_by_solver["infconv"]);
  }
  rec.wall_findings["augmented_over_infconv_at_largest_m"] =
      mean_by_solver["augmented"].back() / mean_by_solver["infconv"].back();
  return rec;
}

inline RunRecord run_experiment(const ExperimentSpec &spec) {
  switch (spec.name) {
  case ExperimentName::vary_beta:
    return experiment_vary_beta(spec);
  case ExperimentName::vary_m:
    return experiment_vary_m(spec);
  case ExperimentName::iteration_count:
    return experiment_iteration_count(spec);
  case ExperimentName::timing:
    return experiment_timing(spec);
  }
  throw InvalidInput("unknown experiment");
}

} // namespace foldsolve
