#pragma once

// Solvers for min_{u,v} T(u, v) = ½‖A(u+v) − y‖² + (α/q)‖u‖_q^q + (β/2)‖v‖².
//
//  * solve_alternating: block minimization, inner iterative thresholding on u
//    and closed-form Tikhonov update of v.
//  * solve_augmented:   iterative thresholding on the augmented problem
//    ½‖B_β u − y_β‖² + (α/q)‖u‖_q^q, then v = v(u).
//  * solve_infconv:     proximal gradient on ½‖Aw − y‖² + g(w) with g the
//    infimal convolution of the two penalties; u is the minimizer attaining
//    g(w) and v = w − u.

#include "foldsolve/augmented.hpp"
#include "foldsolve/prox.hpp"

#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace foldsolve {

enum class SolverKind { alternating, augmented, infconv };

inline const char *to_string(SolverKind kind) {
  switch (kind) {
  case SolverKind::alternating:
    return "alternating";
  case SolverKind::augmented:
    return "augmented";
  case SolverKind::infconv:
    return "infconv";
  }
  return "?";
}

inline SolverKind solver_kind_from_string(const std::string &name) {
  if (name == "alternating" || name == "am")
    return SolverKind::alternating;
  if (name == "augmented")
    return SolverKind::augmented;
  if (name == "infconv" || name == "ic")
    return SolverKind::infconv;
  throw InvalidInput("unknown solver '" + name + "'");
}

struct SolverConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double q = 1.0;
  double mu = 1.0;
  Index max_iters = 100000;
  double stop_tol = 1e-10;
  /// Accuracy of the inner thresholding loop of alternating minimization.
  double inner_tol = 1e-8;
  /// Inner step of alternating minimization; 0 selects 0.99/‖A‖².
  double inner_mu = 0.0;
  Index inner_max_iters = 1000000;
  /// Ignore stop_tol and run exactly max_iters iterations.
  bool fixed_budget = false;
  bool record_objective = true;
  bool record_signs = true;
  std::optional<RealVector> init;
  /// Reference point for error traces: u★ (alternating, augmented) or w★ (infconv).
  std::optional<RealVector> reference;

  void validate() const {
    require(alpha > 0.0 && std::isfinite(alpha), "solver: alpha must be positive");
    require(beta > 0.0 && std::isfinite(beta), "solver: beta must be positive");
    require(q > 0.0 && q <= 1.0, "solver: exponent q must lie in (0, 1]");
    require(mu > 0.0 && std::isfinite(mu), "solver: step mu must be positive");
    require(max_iters >= 1, "solver: max_iters must be at least 1");
    require(stop_tol > 0.0, "solver: stop_tol must be positive");
    require(inner_tol > 0.0, "solver: inner_tol must be positive");
    require(inner_mu >= 0.0, "solver: inner_mu must be nonnegative");
  }

  ProxParams lq_prox(double step) const { return {q, alpha / q, step}; }
  InfConvPenaltyParams penalty() const { return {alpha, beta, q}; }
};

struct IterationRecord {
  Index iter = 0;
  /// ‖x^k − x★‖ / ‖x★‖ (absolute when x★ = 0); NaN without a reference.
  double err_to_ref = std::numeric_limits<double>::quiet_NaN();
  double step_norm = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Index support_size = 0;
  std::vector<std::int8_t> signs;
  std::int64_t prox_calls = 0;
  double elapsed_seconds = 0.0;

  IndexSet support() const {
    IndexSet s;
    for (std::size_t i = 0; i < signs.size(); ++i)
      if (signs[i] != 0)
        s.push_back(static_cast<Index>(i));
    return s;
  }
};

struct IterationTrace {
  std::vector<IterationRecord> records;

  bool empty() const { return records.empty(); }
  const IterationRecord &back() const { return records.back(); }
  std::size_t size() const { return records.size(); }
};

enum class SolverStatus { converged, max_iters, diverged };

inline const char *to_string(SolverStatus s) {
  switch (s) {
  case SolverStatus::converged:
    return "converged";
  case SolverStatus::max_iters:
    return "max-iters";
  case SolverStatus::diverged:
    return "diverged";
  }
  return "?";
}

struct SolverResult {
  RealVector u;
  RealVector v;
  RealVector w;
  IterationTrace trace;
  SolverStatus status = SolverStatus::max_iters;
  std::vector<std::string> warnings;
  /// Seconds spent before the first iteration (B_β construction for augmented).
  double setup_seconds = 0.0;
  double total_seconds = 0.0;

  Index iterations() const { return trace.empty() ? 0 : trace.back().iter; }
  std::int64_t prox_calls() const { return trace.empty() ? 0 : trace.back().prox_calls; }
};

// ---------------------------------------------------------------------------
// Objectives

inline double objective_T(const RealVector &u, const RealVector &v, const ProblemInstance &p,
                          double alpha, double beta, double q) {
  const double fidelity = 0.5 * (p.matrix * (u + v) - p.observation).squaredNorm();
  const double penalty = alpha == 0.0 ? 0.0 : alpha / q * lq_sum(u, q);
  return fidelity + penalty + 0.5 * beta * v.squaredNorm();
}

inline double objective_F(const RealVector &u, const AugmentedOperator &aug, double alpha,
                          double q) {
  const double fidelity = 0.5 * (aug.b_matrix * u - aug.y_beta).squaredNorm();
  return fidelity + (alpha == 0.0 ? 0.0 : alpha / q * lq_sum(u, q));
}

inline double objective_IC(const RealVector &w, const ProblemInstance &p,
                           const InfConvPenaltyParams &pen) {
  return 0.5 * (p.matrix * w - p.observation).squaredNorm() +
         infconv_value_and_argmin(w, pen).value;
}

// ---------------------------------------------------------------------------
// Stationarity

/// Largest violation of the fixed-point conditions of the augmented iteration:
/// α sgn(u_i)|u_i|^{q−1} + ∇_i = 0 on supp(u), and |μ∇_i| ≤ τ_μ off it
/// (reported as max(0, |∇_i| − τ_μ/μ)), with ∇ = B_βᵀ(B_β u − y_β).
inline double kkt_residual_augmented(const RealVector &u, const AugmentedOperator &aug,
                                     double alpha, double q, double mu) {
  const RealVector grad = aug.b_matrix.transpose() * (aug.b_matrix * u - aug.y_beta);
  const double tau = threshold_profile({q, alpha / q, mu}).tau;
  double worst = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    if (u(i) != 0.0) {
      const double d = std::copysign(alpha * std::pow(std::abs(u(i)), q - 1.0), u(i));
      worst = std::max(worst, std::abs(d + grad(i)));
    } else {
      worst = std::max(worst, std::abs(grad(i)) - tau / mu);
    }
  }
  return worst;
}

/// Largest violation of αμ sgn(u_i)|u_i|^{q−1} = −μ(Aᵀ(Aw − y))_i on supp(u)
/// and 0 = βμ w_i + μ(Aᵀ(Aw − y))_i off it, with u attaining g(w).
inline double kkt_residual_infconv(const RealVector &w, const ProblemInstance &p,
                                   const InfConvPenaltyParams &pen, double mu) {
  const RealVector u = infconv_value_and_argmin(w, pen).argmin;
  const RealVector grad = p.matrix.transpose() * (p.matrix * w - p.observation);
  double worst = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    double r;
    if (u(i) != 0.0)
      r = mu * (std::copysign(pen.alpha * std::pow(std::abs(u(i)), pen.q - 1.0), u(i)) +
                grad(i));
    else
      r = mu * (pen.beta * w(i) + grad(i));
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Iteration bookkeeping

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline double relative_error(const RealVector &x, const std::optional<RealVector> &ref) {
  if (!ref)
    return std::numeric_limits<double>::quiet_NaN();
  const double scale = ref->norm();
  const double err = (x - *ref).norm();
  return scale > 0.0 ? err / scale : err;
}

inline bool blew_up(const RealVector &x) {
  return !x.allFinite() || x.norm() > 1e150;
}

inline void fill_signs(IterationRecord &rec, const RealVector &sparse_part, bool keep) {
  Index count = 0;
  if (keep)
    rec.signs.resize(static_cast<std::size_t>(sparse_part.size()));
  for (Index i = 0; i < sparse_part.size(); ++i) {
    const int s = (sparse_part(i) > 0) - (sparse_part(i) < 0);
    count += s != 0;
    if (keep)
      rec.signs[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(s);
  }
  rec.support_size = count;
}

inline RealVector initial_point(const SolverConfig &cfg, Index n) {
  if (!cfg.init)
    return RealVector::Zero(n);
  require(cfg.init->size() == n, "solver: init has wrong length");
  return *cfg.init;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Solvers

/// Thresholded Landweber iteration on the augmented problem, reusing a
/// prebuilt operator. setup_seconds is left at 0.
inline SolverResult solve_augmented(const ProblemInstance &p, const AugmentedOperator &aug,
                                    const SolverConfig &cfg) {
  cfg.validate();
  const auto start = detail::Clock::now();
  SolverResult res;
  const double lipschitz = augmented_lipschitz(aug.source_svd.singular_values(0), cfg.beta);
  if (cfg.mu * lipschitz >= 1.0)
    res.warnings.push_back("step mu >= 1/L = ‖A‖^-2 + β^-1; descent is not guaranteed");

  const ProxParams prox = cfg.lq_prox(cfg.mu);
  const DenseMatrix &b = aug.b_matrix;
  RealVector u = detail::initial_point(cfg, p.cols());
  RealVector next(u.size());
  auto record = [&](Index k, double step, std::int64_t calls) {
    IterationRecord rec;
    rec.iter = k;
    rec.err_to_ref = detail::relative_error(u, cfg.reference);
    rec.step_norm = step;
    if (cfg.record_objective)
      rec.objective = objective_F(u, aug, cfg.alpha, cfg.q);
    detail::fill_signs(rec, u, cfg.record_signs);
    rec.prox_calls = calls;
    rec.elapsed_seconds = detail::seconds_since(start);
    res.trace.records.push_back(std::move(rec));
  };
  record(0, std::numeric_limits<double>::quiet_NaN(), 0);

  res.status = SolverStatus::max_iters;
  for (Index k = 1; k <= cfg.max_iters; ++k) {
    const RealVector forward = u - cfg.mu * (b.transpose() * (b * u - aug.y_beta));
    next = prox_lq_vector(forward, prox);
    const double step = (next - u).norm();
    u.swap(next);
    record(k, step, k);
    if (detail::blew_up(u)) {
      res.status = SolverStatus::diverged;
      break;
    }
    if (!cfg.fixed_budget && step <= cfg.stop_tol) {
      res.status = SolverStatus::converged;
      break;
    }
  }
  res.v = v_of_u(p.matrix, aug.source_svd, p.observation, u, cfg.beta);
  res.u = std::move(u);
  res.w = res.u + res.v;
  res.total_seconds = detail::seconds_since(start);
  return res;
}

/// Builds B_β (timed as setup) and runs the augmented iteration.
inline SolverResult solve_augmented(const ProblemInstance &p, const SolverConfig &cfg) {
  cfg.validate();
  p.validate();
  const auto start = detail::Clock::now();
  const AugmentedOperator aug = build_augmented(p.matrix, p.observation, cfg.beta);
  const double setup = detail::seconds_since(start);
  SolverResult res = solve_augmented(p, aug, cfg);
  res.setup_seconds = setup;
  for (auto &rec : res.trace.records)
    rec.elapsed_seconds += setup;
  res.total_seconds += setup;
  return res;
}

inline SolverResult solve_infconv(const ProblemInstance &p, const SolverConfig &cfg,
                                  std::optional<double> spec_norm_a = std::nullopt) {
  cfg.validate();
  p.validate();
  const auto start = detail::Clock::now();
  SolverResult res;
  const double norm_a = spec_norm_a ? *spec_norm_a : spectral_norm(p.matrix);
  if (cfg.mu * norm_a * norm_a >= 1.0)
    res.warnings.push_back("step mu >= ‖A‖^-2; linear convergence theory does not apply");
  res.setup_seconds = detail::seconds_since(start);

  const InfConvPenaltyParams pen = cfg.penalty();
  const DenseMatrix &a = p.matrix;
  RealVector w = detail::initial_point(cfg, p.cols());
  RealVector u = infconv_value_and_argmin(w, pen).argmin;
  auto record = [&](Index k, double step, std::int64_t calls) {
    IterationRecord rec;
    rec.iter = k;
    rec.err_to_ref = detail::relative_error(w, cfg.reference);
    rec.step_norm = step;
    if (cfg.record_objective)
      rec.objective = 0.5 * (a * w - p.observation).squaredNorm() + pen.alpha / pen.q * lq_sum(u, pen.q) +
                      0.5 * pen.beta * (w - u).squaredNorm();
    detail::fill_signs(rec, u, cfg.record_signs);
    rec.prox_calls = calls;
    rec.elapsed_seconds = detail::seconds_since(start);
    res.trace.records.push_back(std::move(rec));
  };
  record(0, std::numeric_limits<double>::quiet_NaN(), 0);

  res.status = SolverStatus::max_iters;
  for (Index k = 1; k <= cfg.max_iters; ++k) {
    const RealVector forward = w - cfg.mu * (a.transpose() * (a * w - p.observation));
    RealVector next = prox_infconv_g(forward, pen, cfg.mu);
    const double step = (next - w).norm();
    w.swap(next);
    // The attaining minimizer is only needed for the trace and the final split.
    if (cfg.record_objective || cfg.record_signs || k == cfg.max_iters)
      u = infconv_value_and_argmin(w, pen).argmin;
    record(k, step, k);
    if (detail::blew_up(w)) {
      res.status = SolverStatus::diverged;
      break;
    }
    if (!cfg.fixed_budget && step <= cfg.stop_tol) {
      res.status = SolverStatus::converged;
      break;
    }
  }
  res.u = infconv_value_and_argmin(w, pen).argmin;
  res.v = w - res.u;
  res.w = std::move(w);
  res.total_seconds = detail::seconds_since(start);
  return res;
}

inline SolverResult solve_alternating(const ProblemInstance &p, const SolverConfig &cfg) {
  cfg.validate();
  p.validate();
  const auto start = detail::Clock::now();
  SolverResult res;
  const SvdFactors svd = compute_svd(p.matrix);
  const double norm_a = svd.singular_values(0);
  const double inner_mu =
      cfg.inner_mu > 0.0 ? cfg.inner_mu : (norm_a > 0.0 ? 0.99 / (norm_a * norm_a) : 1.0);
  if (inner_mu * norm_a * norm_a >= 1.0)
    res.warnings.push_back("inner step >= ‖A‖^-2; inner thresholding may not converge");
  res.setup_seconds = detail::seconds_since(start);

  const ProxParams prox = cfg.lq_prox(inner_mu);
  const DenseMatrix &a = p.matrix;
  RealVector u = detail::initial_point(cfg, p.cols());
  RealVector v = RealVector::Zero(p.cols());
  std::int64_t calls = 0;
  auto record = [&](Index k, double step) {
    IterationRecord rec;
    rec.iter = k;
    rec.err_to_ref = detail::relative_error(u, cfg.reference);
    rec.step_norm = step;
    if (cfg.record_objective)
      rec.objective = objective_T(u, v, p, cfg.alpha, cfg.beta, cfg.q);
    detail::fill_signs(rec, u, cfg.record_signs);
    rec.prox_calls = calls;
    rec.elapsed_seconds = detail::seconds_since(start);
    res.trace.records.push_back(std::move(rec));
  };
  record(0, std::numeric_limits<double>::quiet_NaN());

  res.status = SolverStatus::max_iters;
  for (Index k = 1; k <= cfg.max_iters; ++k) {
    const RealVector u_prev = u;
    // u-subproblem: iterative thresholding on ½‖A u − (y − A v)‖² + (α/q)‖u‖_q^q.
    const RealVector datum = p.observation - a * v;
    for (Index j = 0; j < cfg.inner_max_iters; ++j) {
      const RealVector forward = u - inner_mu * (a.transpose() * (a * u - datum));
      RealVector next = prox_lq_vector(forward, prox);
      ++calls;
      const double inner_step = (next - u).norm();
      u.swap(next);
      if (inner_step <= cfg.inner_tol || detail::blew_up(u))
        break;
    }
    const RealVector v_next = v_of_u(a, svd, p.observation, u, cfg.beta);
    const double du = (u - u_prev).norm();
    const double dv = (v_next - v).norm();
    v = v_next;
    record(k, std::max(du, dv));
    if (detail::blew_up(u) || detail::blew_up(v)) {
      res.status = SolverStatus::diverged;
      break;
    }
    if (!cfg.fixed_budget && du <= cfg.stop_tol && dv <= cfg.stop_tol) {
      res.status = SolverStatus::converged;
      break;
    }
  }
  res.u = std::move(u);
  res.v = std::move(v);
  res.w = res.u + res.v;
  res.total_seconds = detail::seconds_since(start);
  return res;
}

inline SolverResult solve(SolverKind kind, const ProblemInstance &p, const SolverConfig &cfg) {
  switch (kind) {
  case SolverKind::alternating:
    return solve_alternating(p, cfg);
  case SolverKind::augmented:
    return solve_augmented(p, cfg);
  case SolverKind::infconv:
    return solve_infconv(p, cfg);
  }
  throw InvalidInput("unknown solver kind");
}

/// The iterate a solver's error trace is measured on: w for infconv, u otherwise.
inline const RealVector &tracked_iterate(SolverKind kind, const SolverResult &r) {
  return kind == SolverKind::infconv ? r.w : r.u;
}

inline constexpr double kReferenceTol = 1e-14;

/// Stationary point used as reference: the same solver run to stop_tol 1e-14.
inline RealVector reference_point(SolverKind kind, const ProblemInstance &p, SolverConfig cfg) {
  cfg.stop_tol = kReferenceTol;
  cfg.fixed_budget = false;
  cfg.reference.reset();
  cfg.record_objective = false;
  cfg.record_signs = false;
  cfg.max_iters = std::max<Index>(cfg.max_iters, 200000);
  if (kind == SolverKind::alternating)
    cfg.inner_tol = std::min(cfg.inner_tol, kReferenceTol);
  const SolverResult r = solve(kind, p, cfg);
  return tracked_iterate(kind, r);
}

/// Reference run followed by a traced run measured against it.
inline SolverResult solve_with_reference(SolverKind kind, const ProblemInstance &p,
                                         SolverConfig cfg) {
  cfg.reference = reference_point(kind, p, cfg);
  return solve(kind, p, cfg);
}

/// One step of alternating minimization's inner loop started at u_k with
/// v = v(u_k); coincides with one augmented iteration.
inline RealVector am_single_step(const RealVector &u_k, const ProblemInstance &p,
                                 const SolverConfig &cfg, const SvdFactors &svd) {
  cfg.validate();
  const RealVector v = v_of_u(p.matrix, svd, p.observation, u_k, cfg.beta);
  const RealVector forward =
      u_k - cfg.mu * (p.matrix.transpose() * (p.matrix * (u_k + v) - p.observation));
  return prox_lq_vector(forward, cfg.lq_prox(cfg.mu));
}

inline RealVector am_single_step(const RealVector &u_k, const ProblemInstance &p,
                                 const SolverConfig &cfg) {
  return am_single_step(u_k, p, cfg, compute_svd(p.matrix));
}

} // namespace foldsolve
