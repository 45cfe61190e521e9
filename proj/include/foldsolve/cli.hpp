#pragma once

// Command-line front end: foldsolve <solve|prox-table|analyze|experiment|rip>
// --config FILE [--output-dir DIR] [--seed N].
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid arguments or config.
// The whole config is parsed and validated before anything is computed or
// written; every output file is written atomically.

#include "foldsolve/io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace foldsolve::cli {

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// ---------------------------------------------------------------------------
// Config key documentation, shown by --help.

inline const char *kCommonKeys = R"(Every config is a JSON object with
  schema_version   integer, must be 1
Unknown keys are rejected.)";

inline const char *kProblemKeys = R"(problem (object), one of
  matrix           array of rows (m arrays of n numbers)
  observation      array of m numbers
or
  generate         object:
    ensemble       "gaussian" | "partial-toeplitz" | "partial-circulant" (default gaussian)
    entry_law      "gaussian" | "rademacher" (default gaussian)
    m, n           integers, matrix size (required)
    s              integer, nonzeros of the ground truth (default 0)
    noise_level    number >= 0, ‖v‖/‖u‖ = ‖ξ‖/‖u‖ (default 0)
    seed           integer (default 1; --seed overrides)
    trial          integer stream index (default 0))";

inline const char *kSolveKeys = R"(solve keys:
  problem          see below
  solver           "augmented" | "infconv" | "alternating" | "all" (default "all")
  alpha            number > 0, weight of the lq penalty (required)
  beta             number > 0, weight of the l2 noise penalty (required)
  q                number in (0, 1] (default 1)
  mu               number > 0, step size; default 0.99/L for augmented, 0.99/‖A‖² otherwise
  inner_mu         number > 0, inner step of alternating (default 0.99/‖A‖²)
  max_iters        integer >= 1 (default 100000)
  stop_tol         number > 0, stop when ‖x_{k+1} − x_k‖ <= stop_tol (default 1e-12)
  inner_tol        number > 0, inner accuracy of alternating (default 1e-8)
  with_reference   boolean, also trace the error to a tightly converged run (default false)
  write_trace      boolean, write trace_<solver>.csv (default true)
Writes solve_result.json and, if requested, trace_<solver>.csv.)";

inline const char *kProxKeys = R"(prox-table keys:
  q                number in (0, 1] (required)
  nu               number > 0, penalty weight (required)
  mu               number > 0, step (required)
  u_min, u_max     numbers, input range (default -3, 3)
  points           integer >= 2 (default 601)
Writes prox_table.csv with columns u, prox, tau and, for q = 1/2, closed_form.)";

inline const char *kAnalyzeKeys = R"(analyze keys:
  problem          see below
  solver           "augmented" | "infconv" (default "augmented")
  alpha, beta      numbers > 0 (required)
  q                number in (0, 1] (default 1)
  mu               number > 0 (default as for solve)
  max_iters        integer (default 100000)
  stop_tol         number (default 1e-12)
  tail_fraction    number in (0, 1], window of the empirical rate fit (default 0.3)
  coherence        boolean, include the coherence report of B_beta (default true)
Writes analysis.json with the stationary point summary, rate constants,
alpha_star, empirical rate and coherence bounds.)";

inline const char *kExperimentKeys = R"(experiment keys (defaults are the per-experiment presets):
  experiment       "vary-beta" | "vary-m" | "iteration-count" | "timing" (required)
  paper_scale      boolean, timing only: n = 5000, s = 100, m up to 8000, 20 trials
  m, n, s          integers, problem size
  q                number in (0, 1]
  noise_level      number >= 0
  ensemble         "gaussian" | "partial-toeplitz" | "partial-circulant"
  entry_law        "gaussian" | "rademacher"
  betas            array of numbers > 0 (vary-beta grid)
  ms               array of integers (vary-m and timing grid)
  trials           integer >= 1
  seed             integer (--seed overrides)
  beta             number > 0 (vary-m, iteration-count, timing)
  alpha, mu        numbers > 0 (timing)
  target_support   integer, support size the tuned alpha must produce (0 = s)
  err_target       number, relative error threshold for iteration counts
  tail_fraction    number in (0, 1], empirical rate window
  iterations       integer, timed iterations (timing)
  timing_repeats   integer, repetitions per timed trial (median is kept)
  max_iters        integer
  stop_tol         number
  inner_tol        number (alternating inner accuracy)
Writes <name>.csv, <name>_curves.csv, <name>_aggregate.csv and <name>.json;
timing additionally writes <name>_wall.csv, <name>_wall_aggregate.csv and
<name>_wall.json. Wall-clock files are the only non-reproducible outputs.)";

inline const char *kRipKeys = R"(rip keys:
  problem          see below
  s_max            integer >= 1 (required)
  method           "brute-force" | "gaussian-order" (default "brute-force")
  c                number > 0, constant of the gaussian order estimate (default 1)
Writes rip.csv with columns s, delta, method, witness.)";

// ---------------------------------------------------------------------------
// Config parsing

struct ProblemConfig {
  std::optional<ProblemInstance> explicit_problem;
  MatrixEnsemble ensemble;
  SignalParams signal;
  NoiseSpec noise;

  ProblemInstance build() const {
    if (explicit_problem)
      return *explicit_problem;
    return make_problem(ensemble, signal, noise);
  }
};

inline Json parse_json(const std::string &text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error &e) {
    // nlohmann reports "at line L, column C".
    throw ConfigError("<json>", e.what());
  }
}

inline void check_schema(ConfigReader &r) {
  const auto version = r.required<std::int64_t>("schema_version");
  if (version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version) +
                                            " (expected " + std::to_string(kSchemaVersion) + ")");
}

template <class Fn> auto wrap_field(const std::string &field, Fn &&fn) {
  try {
    return fn();
  } catch (const ConfigError &) {
    throw;
  } catch (const InvalidInput &e) {
    throw ConfigError(field, e.what());
  }
}

inline ProblemConfig parse_problem(ConfigReader &root, std::optional<std::uint64_t> seed) {
  ConfigReader r = root.child("problem");
  ProblemConfig pc;
  if (r.has("generate")) {
    if (r.has("matrix") || r.has("observation"))
      throw ConfigError(r.field("generate"), "give either generate or matrix/observation");
    ConfigReader g = r.child("generate");
    pc.ensemble.kind = wrap_field(g.field("ensemble"), [&] {
      return ensemble_kind_from_string(g.get<std::string>("ensemble", "gaussian"));
    });
    pc.ensemble.entry_law = wrap_field(g.field("entry_law"), [&] {
      return entry_law_from_string(g.get<std::string>("entry_law", "gaussian"));
    });
    pc.ensemble.m = g.required<Index>("m");
    pc.ensemble.n = g.required<Index>("n");
    pc.ensemble.seed = g.get<std::uint64_t>("seed", 1);
    pc.ensemble.trial = g.get<std::uint64_t>("trial", 0);
    if (seed)
      pc.ensemble.seed = *seed;
    pc.signal.s = g.get<Index>("s", 0);
    const double level = g.get<double>("noise_level", 0.0);
    g.finish();
    if (pc.ensemble.m < 1)
      throw ConfigError(g.field("m"), "must be positive");
    if (pc.ensemble.n < 1)
      throw ConfigError(g.field("n"), "must be positive");
    if (pc.signal.s < 0 || pc.signal.s > pc.ensemble.n)
      throw ConfigError(g.field("s"), "must lie in [0, n]");
    if (!(level >= 0.0))
      throw ConfigError(g.field("noise_level"), "must be nonnegative");
    if (pc.ensemble.kind != EnsembleKind::gaussian && pc.ensemble.m > pc.ensemble.n)
      throw ConfigError(g.field("m"), "structured ensembles need m <= n");
    pc.noise = {level, level};
  } else {
    const Json &rows = r.raw("matrix");
    if (!rows.is_array() || rows.empty())
      throw ConfigError(r.field("matrix"), "expected a nonempty array of rows");
    const auto m = static_cast<Index>(rows.size());
    if (!rows[0].is_array() || rows[0].empty())
      throw ConfigError(r.field("matrix"), "rows must be nonempty arrays");
    const auto n = static_cast<Index>(rows[0].size());
    DenseMatrix a(m, n);
    for (Index i = 0; i < m; ++i) {
      const Json &row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Index>(row.size()) != n)
        throw ConfigError(r.field("matrix") + "[" + std::to_string(i) + "]",
                          "expected " + std::to_string(n) + " numbers");
      for (Index j = 0; j < n; ++j) {
        const Json &x = row[static_cast<std::size_t>(j)];
        if (!x.is_number())
          throw ConfigError(r.field("matrix") + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                            "expected a number");
        a(i, j) = x.get<double>();
      }
    }
    const auto obs = r.required<std::vector<double>>("observation");
    if (static_cast<Index>(obs.size()) != m)
      throw ConfigError(r.field("observation"), "length must equal the number of matrix rows");
    RealVector y = Eigen::Map<const RealVector>(obs.data(), m);
    pc.explicit_problem = wrap_field(r.field("matrix"), [&] { return make_instance(a, y); });
  }
  r.finish();
  return pc;
}

struct SolveRequest {
  ProblemConfig problem;
  std::vector<SolverKind> solvers;
  SolverConfig base;
  bool mu_given = false;
  bool with_reference = false;
  bool write_trace = true;
};

inline void read_penalty(ConfigReader &r, SolverConfig &cfg, SolveRequest *req) {
  cfg.alpha = r.required<double>("alpha");
  cfg.beta = r.required<double>("beta");
  cfg.q = r.get<double>("q", 1.0);
  if (r.has("mu")) {
    cfg.mu = r.required<double>("mu");
    if (req)
      req->mu_given = true;
  }
  cfg.max_iters = r.get<Index>("max_iters", 100000);
  cfg.stop_tol = r.get<double>("stop_tol", 1e-12);
  if (!(cfg.alpha > 0.0))
    throw ConfigError("alpha", "must be positive");
  if (!(cfg.beta > 0.0))
    throw ConfigError("beta", "must be positive");
  if (!(cfg.q > 0.0 && cfg.q <= 1.0))
    throw ConfigError("q", "must lie in (0, 1]");
  if (!(cfg.mu > 0.0))
    throw ConfigError("mu", "must be positive");
  if (cfg.max_iters < 1)
    throw ConfigError("max_iters", "must be at least 1");
  if (!(cfg.stop_tol > 0.0))
    throw ConfigError("stop_tol", "must be positive");
}

inline SolveRequest parse_solve(const Json &j, std::optional<std::uint64_t> seed) {
  ConfigReader r(j, "");
  check_schema(r);
  SolveRequest req;
  req.problem = parse_problem(r, seed);
  const std::string solver = r.get<std::string>("solver", "all");
  if (solver == "all")
    req.solvers = {SolverKind::augmented, SolverKind::infconv, SolverKind::alternating};
  else
    req.solvers = {wrap_field("solver", [&] { return solver_kind_from_string(solver); })};
  read_penalty(r, req.base, &req);
  if (r.has("inner_mu")) {
    req.base.inner_mu = r.required<double>("inner_mu");
    if (!(req.base.inner_mu > 0.0))
      throw ConfigError("inner_mu", "must be positive");
  }
  req.base.inner_tol = r.get<double>("inner_tol", 1e-8);
  if (!(req.base.inner_tol > 0.0))
    throw ConfigError("inner_tol", "must be positive");
  req.with_reference = r.get<bool>("with_reference", false);
  req.write_trace = r.get<bool>("write_trace", true);
  r.finish();
  return req;
}

struct ProxTableRequest {
  ProxParams params;
  double u_min = -3.0, u_max = 3.0;
  Index points = 601;
};

inline ProxTableRequest parse_prox_table(const Json &j) {
  ConfigReader r(j, "");
  check_schema(r);
  ProxTableRequest req;
  req.params.q = r.required<double>("q");
  req.params.nu = r.required<double>("nu");
  req.params.mu = r.required<double>("mu");
  req.u_min = r.get<double>("u_min", req.u_min);
  req.u_max = r.get<double>("u_max", req.u_max);
  req.points = r.get<Index>("points", req.points);
  r.finish();
  wrap_field("q", [&] {
    req.params.validate();
    return 0;
  });
  if (!(req.u_max > req.u_min))
    throw ConfigError("u_max", "must exceed u_min");
  if (req.points < 2)
    throw ConfigError("points", "must be at least 2");
  return req;
}

struct AnalyzeRequest {
  ProblemConfig problem;
  SolverKind solver = SolverKind::augmented;
  SolverConfig cfg;
  bool mu_given = false;
  double tail_fraction = 0.3;
  bool coherence = true;
};

inline AnalyzeRequest parse_analyze(const Json &j, std::optional<std::uint64_t> seed) {
  ConfigReader r(j, "");
  check_schema(r);
  AnalyzeRequest req;
  req.problem = parse_problem(r, seed);
  const std::string solver = r.get<std::string>("solver", "augmented");
  req.solver = wrap_field("solver", [&] { return solver_kind_from_string(solver); });
  if (req.solver == SolverKind::alternating)
    throw ConfigError("solver", "analysis is available for augmented and infconv");
  SolveRequest tmp;
  read_penalty(r, req.cfg, &tmp);
  req.mu_given = tmp.mu_given;
  req.tail_fraction = r.get<double>("tail_fraction", 0.3);
  req.coherence = r.get<bool>("coherence", true);
  r.finish();
  if (!(req.tail_fraction > 0.0 && req.tail_fraction <= 1.0))
    throw ConfigError("tail_fraction", "must lie in (0, 1]");
  return req;
}

struct ExperimentRequest {
  ExperimentSpec spec;
  bool paper_scale = false;
};

inline ExperimentRequest parse_experiment(const Json &j, std::optional<std::uint64_t> seed,
                                          bool paper_scale_flag) {
  ConfigReader r(j, "");
  check_schema(r);
  ExperimentRequest req;
  req.paper_scale = r.get<bool>("paper_scale", false) || paper_scale_flag;
  req.spec = spec_from_json(r, req.paper_scale);
  r.finish();
  if (seed)
    req.spec.seed = *seed;
  return req;
}

struct RipRequest {
  ProblemConfig problem;
  Index s_max = 1;
  RipMethod method = RipMethod::brute_force;
  double c = 1.0;
};

inline RipRequest parse_rip(const Json &j, std::optional<std::uint64_t> seed) {
  ConfigReader r(j, "");
  check_schema(r);
  RipRequest req;
  req.problem = parse_problem(r, seed);
  req.s_max = r.required<Index>("s_max");
  const std::string method = r.get<std::string>("method", "brute-force");
  if (method == "brute-force")
    req.method = RipMethod::brute_force;
  else if (method == "gaussian-order")
    req.method = RipMethod::gaussian_order;
  else
    throw ConfigError("method", "expected brute-force or gaussian-order");
  req.c = r.get<double>("c", 1.0);
  r.finish();
  if (req.s_max < 1)
    throw ConfigError("s_max", "must be at least 1");
  if (!(req.c > 0.0))
    throw ConfigError("c", "must be positive");
  const Index n = req.problem.explicit_problem ? req.problem.explicit_problem->cols()
                                               : req.problem.ensemble.n;
  if (req.s_max > n)
    throw ConfigError("s_max", "must not exceed the number of columns");
  if (req.method == RipMethod::brute_force && binomial(n, req.s_max) > kRipEnumerationLimit)
    throw ConfigError("s_max", "brute force would enumerate more than 1000000 supports");
  return req;
}

// ---------------------------------------------------------------------------
// Commands

struct Context {
  std::filesystem::path output_dir;
  std::ostream &out;
  bool quiet = false;
};

inline double default_mu(SolverKind kind, double norm_a, double beta) {
  if (kind == SolverKind::augmented)
    return 0.99 / augmented_lipschitz(norm_a, beta);
  return 0.99 / (norm_a * norm_a);
}

inline Json result_json(SolverKind kind, const SolverResult &res, const ProblemInstance &p,
                        const SolverConfig &cfg) {
  Json j;
  j["solver"] = to_string(kind);
  j["status"] = to_string(res.status);
  j["iterations"] = res.iterations();
  j["prox_calls"] = res.prox_calls();
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["q"] = cfg.q;
  j["mu"] = cfg.mu;
  j["u"] = vector_to_json(res.u);
  j["v"] = vector_to_json(res.v);
  j["w"] = vector_to_json(res.w);
  j["objective_T"] = objective_T(res.u, res.v, p, cfg.alpha, cfg.beta, cfg.q);
  if (kind == SolverKind::infconv) {
    j["kkt_residual"] = kkt_residual_infconv(res.w, p, cfg.penalty(), cfg.mu);
  } else {
    const AugmentedOperator aug = build_augmented(p.matrix, p.observation, cfg.beta);
    const double mu = kind == SolverKind::augmented ? cfg.mu : 0.99 / augmented_lipschitz(aug.source_svd.singular_values(0), cfg.beta);
    j["kkt_residual"] = kkt_residual_augmented(res.u, aug, cfg.alpha, cfg.q, mu);
  }
  j["support_size"] = support_of(res.u).size();
  j["warnings"] = res.warnings;
  j["setup_seconds"] = res.setup_seconds;
  j["total_seconds"] = res.total_seconds;
  return j;
}

inline int cmd_solve(const SolveRequest &req, const Context &ctx) {
  const ProblemInstance p = req.problem.build();
  const double norm_a = spectral_norm(p.matrix);
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["results"] = Json::array();
  std::vector<std::pair<std::string, std::string>> files;
  for (SolverKind kind : req.solvers) {
    SolverConfig cfg = req.base;
    if (!req.mu_given)
      cfg.mu = default_mu(kind, norm_a, cfg.beta);
    const SolverResult res = req.with_reference ? solve_with_reference(kind, p, cfg) : solve(kind, p, cfg);
    out["results"].push_back(result_json(kind, res, p, cfg));
    if (req.write_trace)
      files.emplace_back(std::string("trace_") + to_string(kind) + ".csv", trace_to_csv(res.trace));
    if (!ctx.quiet)
      ctx.out << to_string(kind) << ": " << to_string(res.status) << " after " << res.iterations()
              << " iterations, support " << support_of(res.u).size() << "\n";
  }
  files.emplace_back("solve_result.json", out.dump(2) + "\n");
  for (const auto &[name, content] : files)
    atomic_write(ctx.output_dir / name, content);
  return kExitOk;
}

inline int cmd_prox_table(const ProxTableRequest &req, const Context &ctx) {
  Table t{{"u", "prox", "tau"}, {}};
  const bool half = req.params.q == 0.5;
  if (half)
    t.columns.push_back("closed_form");
  const double tau = threshold_profile(req.params).tau;
  for (Index i = 0; i < req.points; ++i) {
    const double u = req.u_min + (req.u_max - req.u_min) * static_cast<double>(i) /
                                     static_cast<double>(req.points - 1);
    std::vector<Cell> row{u, prox_lq_scalar(u, req.params), tau};
    if (half)
      row.emplace_back(prox_half_closed_form(u, req.params.nu, req.params.mu));
    t.rows.push_back(std::move(row));
  }
  atomic_write(ctx.output_dir / "prox_table.csv", table_to_csv(t));
  if (!ctx.quiet)
    ctx.out << "prox-table: " << req.points << " points, tau = " << format_double(tau) << "\n";
  return kExitOk;
}

inline Json rate_json(const RateBound &rb) {
  Json j;
  j["constant"] = finite_or_null(rb.constant);
  j["admissible"] = rb.admissible;
  j["diagnostic"] = rb.diagnostic;
  Json c = Json::object();
  for (const auto &[k, v] : rb.components)
    c[k] = finite_or_null(v);
  j["components"] = c;
  return j;
}

inline int cmd_analyze(const AnalyzeRequest &req, const Context &ctx) {
  const ProblemInstance p = req.problem.build();
  SolverConfig cfg = req.cfg;
  const double norm_a = spectral_norm(p.matrix);
  if (!req.mu_given)
    cfg.mu = default_mu(req.solver, norm_a, cfg.beta);
  const SolverResult res = solve_with_reference(req.solver, p, cfg);
  cfg.reference = tracked_iterate(req.solver, res);
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["solver"] = to_string(req.solver);
  out["status"] = to_string(res.status);
  out["iterations"] = res.iterations();
  out["spectral_norm"] = norm_a;
  out["lipschitz_augmented"] = augmented_lipschitz(norm_a, cfg.beta);
  out["mu"] = cfg.mu;
  double emp = std::nan("");
  try {
    emp = empirical_rate(res.trace, req.tail_fraction);
  } catch (const UndefinedRate &e) {
    out["empirical_rate_diagnostic"] = e.what();
  }
  out["empirical_rate"] = finite_or_null(emp);
  try {
    const TheoryReport th = req.solver == SolverKind::augmented
                                ? augmented_theory(p.matrix, cfg, tracked_iterate(req.solver, res))
                                : infconv_theory(p.matrix, cfg, tracked_iterate(req.solver, res));
    Json t;
    t["support"] = th.point.support;
    t["d_min"] = th.point.d_min;
    t["lambda_min"] = th.point.lambda_min;
    t["rate"] = rate_json(th.rate);
    t["alpha_star"] = finite_or_null(th.alpha_star.alpha_star);
    if (th.rip_form_rate)
      t["rip_form_rate"] = rate_json(*th.rip_form_rate);
    out["theory"] = t;
  } catch (const UndefinedRate &e) {
    out["theory_diagnostic"] = e.what();
  }
  if (req.coherence) {
    try {
      const CoherenceReport rep = coherence_report(p.matrix, cfg.beta);
      Json c;
      c["coh_a"] = rep.coh_a;
      c["coh_b"] = rep.coh_b;
      c["remark_bound"] = rep.remark_bound;
      c["lemma_bound"] = rep.lemma_bound;
      c["upper_bound"] = rep.upper_bound;
      c["whitened_limit"] = rep.whitened_limit ? Json(*rep.whitened_limit) : Json(nullptr);
      c["rank_deficient"] = rep.rank_deficient;
      out["coherence"] = c;
    } catch (const InvalidInput &e) {
      out["coherence_diagnostic"] = e.what();
    }
  }
  atomic_write(ctx.output_dir / "analysis.json", out.dump(2) + "\n");
  atomic_write(ctx.output_dir / "analysis_trace.csv", trace_to_csv(res.trace));
  if (!ctx.quiet)
    ctx.out << "analyze: empirical rate " << format_double(emp) << "\n";
  return kExitOk;
}

/// Writes the experiment outputs; returns the file names written.
inline std::vector<std::string> write_run_record(const RunRecord &rec, const std::filesystem::path &dir) {
  const std::string name = to_string(rec.spec.name);
  const std::string hash = spec_hash(rec.spec);
  const std::vector<std::pair<std::string, std::string>> meta{{"spec_hash", hash},
                                                              {"experiment", name}};
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back(name + ".csv", table_to_csv(rec.trials, meta));
  files.emplace_back(name + "_curves.csv", table_to_csv(rec.curves, meta));
  files.emplace_back(name + "_aggregate.csv", table_to_csv(rec.aggregate, meta));
  Json side;
  side["schema_version"] = kSchemaVersion;
  side["spec"] = spec_to_json(rec.spec);
  side["spec_hash"] = hash;
  side["findings"] = table_summary_json(rec.findings);
  files.emplace_back(name + ".json", side.dump(2) + "\n");
  if (!rec.wall.rows.empty()) {
    files.emplace_back(name + "_wall.csv", table_to_csv(rec.wall, meta));
    files.emplace_back(name + "_wall_aggregate.csv", table_to_csv(rec.wall_aggregate, meta));
    Json wall;
    wall["spec_hash"] = hash;
    wall["findings"] = table_summary_json(rec.wall_findings);
    files.emplace_back(name + "_wall.json", wall.dump(2) + "\n");
  }
  std::vector<std::string> names;
  for (const auto &[file, content] : files) {
    atomic_write(dir / file, content);
    names.push_back(file);
  }
  return names;
}

inline int cmd_experiment(const ExperimentRequest &req, const Context &ctx) {
  const RunRecord rec = run_experiment(req.spec);
  write_run_record(rec, ctx.output_dir);
  if (!ctx.quiet) {
    ctx.out << to_string(req.spec.name) << ": spec_hash " << spec_hash(req.spec) << "\n";
    for (const auto &[k, v] : rec.findings)
      ctx.out << "  " << k << " = " << format_double(v) << "\n";
    for (const auto &[k, v] : rec.wall_findings)
      ctx.out << "  " << k << " = " << format_double(v) << "\n";
  }
  return kExitOk;
}

inline int cmd_rip(const RipRequest &req, const Context &ctx) {
  const ProblemInstance p = req.problem.build();
  Table t{{"s", "delta", "method", "witness"}, {}};
  for (Index s = 1; s <= req.s_max; ++s) {
    const RipEstimate est = req.method == RipMethod::brute_force
                                ? rip_bruteforce(p.matrix, s)
                                : rip_gaussian_order(p.rows(), p.cols(), s, req.c);
    std::string witness;
    for (std::size_t i = 0; i < est.witness.size(); ++i)
      witness += (i ? " " : "") + std::to_string(est.witness[i]);
    t.rows.push_back({static_cast<std::int64_t>(s), est.delta,
                      std::string(req.method == RipMethod::brute_force ? "brute-force" : "gaussian-order"),
                      witness});
  }
  atomic_write(ctx.output_dir / "rip.csv", table_to_csv(t));
  if (!ctx.quiet)
    ctx.out << "rip: delta_" << req.s_max << " = " << format_double(std::get<double>(t.rows.back()[1]))
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char *const *argv, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  CLI::App app{"foldsolve: sparse recovery under noise folding"};
  app.require_subcommand(1);
  app.footer(kCommonKeys);

  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
  bool paper_scale = false;

  auto add = [&](const std::string &name, const std::string &desc, const char *keys,
                 bool with_problem) {
    CLI::App *sub = app.add_subcommand(name, desc);
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_option("-o,--output-dir", output_dir, "directory for output files")
        ->capture_default_str();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--log-level", log_level, "quiet | info")
        ->check(CLI::IsMember({"quiet", "info"}))
        ->capture_default_str();
    std::string footer = std::string(kCommonKeys) + "\n\n" + keys;
    if (with_problem)
      footer += std::string("\n\n") + kProblemKeys;
    sub->footer(footer);
    return sub;
  };
  CLI::App *solve_cmd = add("solve", "run one or all solvers on a problem", kSolveKeys, true);
  CLI::App *prox_cmd = add("prox-table", "tabulate the scalar lq proximal map", kProxKeys, false);
  CLI::App *analyze_cmd = add("analyze", "rate constants and coherence at a stationary point",
                              kAnalyzeKeys, true);
  CLI::App *exp_cmd = add("experiment", "run a figure experiment", kExperimentKeys, false);
  exp_cmd->add_flag("--paper-scale", paper_scale, "timing: use the full-size grid");
  CLI::App *rip_cmd = add("rip", "restricted isometry constants", kRipKeys, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  const Context ctx{output_dir, out, log_level == "quiet"};
  try {
    const Json j = parse_json(read_file(config_path));
    // Parse and validate fully before computing anything.
    if (solve_cmd->parsed()) {
      const SolveRequest req = parse_solve(j, seed);
      return cmd_solve(req, ctx);
    }
    if (prox_cmd->parsed()) {
      const ProxTableRequest req = parse_prox_table(j);
      return cmd_prox_table(req, ctx);
    }
    if (analyze_cmd->parsed()) {
      const AnalyzeRequest req = parse_analyze(j, seed);
      return cmd_analyze(req, ctx);
    }
    if (exp_cmd->parsed()) {
      const ExperimentRequest req = parse_experiment(j, seed, paper_scale);
      return cmd_experiment(req, ctx);
    }
    if (rip_cmd->parsed()) {
      const RipRequest req = parse_rip(j, seed);
      return cmd_rip(req, ctx);
    }
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

} // namespace foldsolve::cli
