#pragma once

// Local linear-rate constants for the augmented and infimal-convolution
// iterations, restricted isometry estimates, and rate fitting on traces.

#include "foldsolve/solvers.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace foldsolve {

struct RateBound {
  double constant = 0.0;
  bool admissible = false;
  std::map<std::string, double> components;
  std::string diagnostic;
};

struct AlphaRange {
  double alpha_star = std::numeric_limits<double>::infinity();
};

/// 1 − μα(1−q)(d_min/2)^{q−2}: curvature correction of the lq term near u★.
inline double curvature_denominator(double mu, double alpha, double q, double d_min) {
  if (q == 1.0)
    return 1.0;
  return 1.0 - mu * alpha * (1.0 - q) * std::pow(0.5 * d_min, q - 2.0);
}

/// (1 − δ)², the lower eigenvalue floor implied by an s-RIP constant δ.
inline double rip_floor(double delta) { return (1.0 - delta) * (1.0 - delta); }

/// Contraction factor of the augmented iteration near u★.
///
/// floor_term is λ_min(A_IᵀA_I) on I = supp(u★) (exact form) or (1 − δ_s)²
/// (RIP form).
inline RateBound rate_augmented(double spec_norm_a, double beta, double mu, double alpha,
                                double q, double floor_term, double d_min) {
  require(beta > 0.0 && mu > 0.0 && alpha >= 0.0, "rate_augmented: invalid parameters");
  require(d_min > 0.0, "rate_augmented: d_min must be positive");
  RateBound rb;
  const double shrink = 1.0 / (1.0 + spec_norm_a * spec_norm_a / beta);
  const double numerator = 1.0 - mu * shrink * floor_term;
  const double denominator = curvature_denominator(mu, alpha, q, d_min);
  rb.components = {{"numerator", numerator},
                   {"denominator", denominator},
                   {"shrink", shrink},
                   {"floor_term", floor_term}};
  const double step_limit = 1.0 / augmented_lipschitz(spec_norm_a, beta);
  if (denominator <= 0.0) {
    rb.constant = std::numeric_limits<double>::infinity();
    rb.diagnostic = "curvature denominator is not positive (alpha too large)";
    return rb;
  }
  rb.constant = numerator / denominator;
  if (!(mu < step_limit))
    rb.diagnostic = "step mu violates mu < ‖A‖^-2 + β^-1";
  else if (rb.constant >= 1.0)
    rb.diagnostic = "constant is not below 1 (alpha >= alpha_star)";
  rb.admissible = mu < step_limit && rb.constant < 1.0 && rb.constant >= 0.0;
  return rb;
}

inline AlphaRange alpha_star_augmented(double spec_norm_a, double beta, double floor_term,
                                       double q, double d_min) {
  require(d_min > 0.0, "alpha_star_augmented: d_min must be positive");
  if (q == 1.0)
    return {};
  const double shrink = 1.0 / (1.0 + spec_norm_a * spec_norm_a / beta);
  return {shrink * floor_term / (1.0 - q) * std::pow(0.5 * d_min, 2.0 - q)};
}

namespace detail {

// ‖P_S (I − μAᵀA)‖ for a row selection S.
inline double projected_iteration_norm(const DenseMatrix &a, const IndexSet &rows, double mu) {
  if (rows.empty())
    return 0.0;
  const DenseMatrix a_s = columns(a, rows);
  DenseMatrix m = -mu * (a_s.transpose() * a);
  for (std::size_t k = 0; k < rows.size(); ++k)
    m(static_cast<Index>(k), rows[k]) += 1.0;
  return spectral_norm(m);
}

} // namespace detail

inline RateBound rate_infconv(const DenseMatrix &a, const IndexSet &support, double mu,
                              double alpha, double beta, double q, double d_min) {
  require(!support.empty(), "rate_infconv: support must be nonempty");
  require(static_cast<Index>(support.size()) < a.cols(),
          "rate_infconv: support must be a proper subset");
  require(d_min > 0.0 && mu > 0.0 && beta > 0.0 && alpha >= 0.0,
          "rate_infconv: invalid parameters");
  RateBound rb;
  const double on = detail::projected_iteration_norm(a, support, mu);
  const double off = detail::projected_iteration_norm(a, complement(support, a.cols()), mu);
  const double denominator = curvature_denominator(mu, alpha, q, d_min);
  const double norm_a = spectral_norm(a);
  rb.components = {{"on_support_norm", on},
                   {"off_support_norm", off},
                   {"denominator", denominator},
                   {"off_support_damping", 1.0 + mu * beta}};
  if (denominator <= 0.0) {
    rb.constant = std::numeric_limits<double>::infinity();
    rb.diagnostic = "curvature denominator is not positive (alpha too large)";
    return rb;
  }
  const double on_term = on / denominator;
  const double off_term = off / (1.0 + mu * beta);
  rb.constant = std::sqrt(on_term * on_term + off_term * off_term);
  rb.components["on_support_term"] = on_term;
  rb.components["off_support_term"] = off_term;
  const bool step_ok = mu * norm_a * norm_a < 1.0;
  if (!step_ok)
    rb.diagnostic = "step mu violates mu < ‖A‖^-2";
  else if (rb.constant >= 1.0)
    rb.diagnostic = "constant is not below 1";
  rb.admissible = step_ok && rb.constant < 1.0;
  return rb;
}

inline AlphaRange alpha_star_infconv(const DenseMatrix &a, const IndexSet &support, double mu,
                                     double q, double d_min) {
  require(d_min > 0.0 && mu > 0.0, "alpha_star_infconv: invalid parameters");
  if (q == 1.0)
    return {};
  const double on = detail::projected_iteration_norm(a, support, mu);
  return {(1.0 - on) / (mu * (1.0 - q)) * std::pow(0.5 * d_min, 2.0 - q)};
}

// ---------------------------------------------------------------------------
// Restricted isometry

enum class RipMethod { brute_force, gaussian_order };

struct RipEstimate {
  Index s = 0;
  double delta = 0.0;
  RipMethod method = RipMethod::brute_force;
  /// Maximizing support (brute force only).
  IndexSet witness;
};

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n)
    return 0.0;
  double c = 1.0;
  for (Index i = 1; i <= k; ++i)
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

inline constexpr double kRipEnumerationLimit = 1e6;

/// δ_s = max over |I| = s of max(σ_max(A_I) − 1, 1 − σ_min(A_I)), clipped at 0.
/// Uses the unsquared definition (1−δ)‖u‖ ≤ ‖Au‖ ≤ (1+δ)‖u‖.
inline RipEstimate rip_bruteforce(const DenseMatrix &a, Index s) {
  const Index n = a.cols();
  require(s >= 1 && s <= n, "rip_bruteforce: order s must lie in [1, n]");
  const double count = binomial(n, s);
  if (count > kRipEnumerationLimit)
    throw InvalidInput("rip_bruteforce: " + std::to_string(static_cast<long long>(count)) +
                       " supports exceed the enumeration limit of 1000000");
  const DenseMatrix gram = a.transpose() * a;
  RipEstimate est{s, 0.0, RipMethod::brute_force, {}};
  IndexSet idx(static_cast<std::size_t>(s));
  std::iota(idx.begin(), idx.end(), Index{0});
  DenseMatrix sub(s, s);
  double best = -1.0;
  while (true) {
    for (Index i = 0; i < s; ++i)
      for (Index j = 0; j < s; ++j)
        sub(i, j) = gram(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(sub, Eigen::EigenvaluesOnly);
    const double lo = std::sqrt(std::max(0.0, eig.eigenvalues()(0)));
    const double hi = std::sqrt(std::max(0.0, eig.eigenvalues()(s - 1)));
    const double dev = std::max(hi - 1.0, 1.0 - lo);
    if (dev > best) {
      best = dev;
      est.witness = idx;
    }
    // Next combination in lexicographic order.
    Index pos = s - 1;
    while (pos >= 0 && idx[pos] == n - s + pos)
      --pos;
    if (pos < 0)
      break;
    ++idx[pos];
    for (Index k = pos + 1; k < s; ++k)
      idx[k] = idx[k - 1] + 1;
  }
  est.delta = std::max(0.0, best);
  return est;
}

/// C m^{-1/2} sqrt(s log(e n / s)); an order-of-magnitude estimate for
/// Gaussian matrices with variance 1/m entries.
inline RipEstimate rip_gaussian_order(Index m, Index n, Index s, double c = 1.0) {
  require(m >= 1 && n >= 1 && s >= 1, "rip_gaussian_order: dimensions must be positive");
  const double sd = static_cast<double>(s);
  const double delta =
      c * std::sqrt(sd * std::log(std::exp(1.0) * static_cast<double>(n) / sd) /
                    static_cast<double>(m));
  return {s, delta, RipMethod::gaussian_order, {}};
}

// ---------------------------------------------------------------------------
// Empirical rates

class UndefinedRate : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Index of the first record after which the sign pattern never changes.
/// Returns 0 when signs were not recorded.
inline std::size_t stabilization_index(const IterationTrace &trace) {
  std::size_t last_change = 0;
  for (std::size_t k = 1; k < trace.records.size(); ++k)
    if (trace.records[k].signs != trace.records[k - 1].signs)
      last_change = k;
  return last_change;
}

/// Per-step contraction fitted as exp(slope) of a least-squares line through
/// log(err_to_ref) over the trailing tail_fraction of the post-stabilization
/// records with err_to_ref > floor.
inline double empirical_rate(const IterationTrace &trace, double tail_fraction = 0.3,
                             double floor = 1e-13) {
  require(tail_fraction > 0.0 && tail_fraction <= 1.0,
          "empirical_rate: tail_fraction must lie in (0, 1]");
  const std::size_t start = stabilization_index(trace);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = start; k < trace.records.size(); ++k) {
    const auto &rec = trace.records[k];
    if (std::isfinite(rec.err_to_ref) && rec.err_to_ref > floor)
      pts.emplace_back(static_cast<double>(rec.iter), std::log(rec.err_to_ref));
  }
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(pts.size())));
  if (keep < 10)
    throw UndefinedRate("empirical_rate: fewer than 10 tail points above the error floor");
  pts.erase(pts.begin(), pts.end() - static_cast<std::ptrdiff_t>(keep));
  double mx = 0.0, my = 0.0;
  for (const auto &[x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(keep);
  my /= static_cast<double>(keep);
  double sxy = 0.0, sxx = 0.0;
  for (const auto &[x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return std::exp(sxy / sxx);
}

// ---------------------------------------------------------------------------
// Assembled theory for a converged run

struct StationaryPointSummary {
  IndexSet support;
  double d_min = 0.0;
  double lambda_min = 0.0;
};

inline StationaryPointSummary summarize_stationary_point(const DenseMatrix &a,
                                                         const RealVector &sparse_part) {
  StationaryPointSummary s;
  s.support = support_of(sparse_part);
  if (s.support.empty())
    return s;
  s.d_min = std::numeric_limits<double>::infinity();
  for (Index i : s.support)
    s.d_min = std::min(s.d_min, std::abs(sparse_part(i)));
  s.lambda_min = min_singular_on_support(a, s.support);
  return s;
}

struct TheoryReport {
  StationaryPointSummary point;
  RateBound rate;
  AlphaRange alpha_star;
  /// RIP-form constant with δ_s from the Gaussian order estimate (C = 1),
  /// s = |supp(u★)|; only meaningful as a trend.
  std::optional<RateBound> rip_form_rate;
};

/// Exact-form theory of the augmented iteration at its stationary point u★.
inline TheoryReport augmented_theory(const DenseMatrix &a, const SolverConfig &cfg,
                                     const RealVector &u_star) {
  TheoryReport rep;
  rep.point = summarize_stationary_point(a, u_star);
  if (rep.point.support.empty())
    throw UndefinedRate("augmented_theory: stationary point has empty support");
  const double norm_a = spectral_norm(a);
  rep.rate = rate_augmented(norm_a, cfg.beta, cfg.mu, cfg.alpha, cfg.q, rep.point.lambda_min,
                            rep.point.d_min);
  rep.alpha_star =
      alpha_star_augmented(norm_a, cfg.beta, rep.point.lambda_min, cfg.q, rep.point.d_min);
  const RipEstimate rip = rip_gaussian_order(a.rows(), a.cols(),
                                             static_cast<Index>(rep.point.support.size()));
  if (rip.delta < 1.0)
    rep.rip_form_rate = rate_augmented(norm_a, cfg.beta, cfg.mu, cfg.alpha, cfg.q,
                                       rip_floor(rip.delta), rep.point.d_min);
  return rep;
}

/// Theory of the infconv iteration at w★, with I = supp(u★), u★ attaining g(w★).
inline TheoryReport infconv_theory(const DenseMatrix &a, const SolverConfig &cfg,
                                   const RealVector &w_star) {
  TheoryReport rep;
  const RealVector u_star = infconv_value_and_argmin(w_star, cfg.penalty()).argmin;
  rep.point = summarize_stationary_point(a, u_star);
  if (rep.point.support.empty())
    throw UndefinedRate("infconv_theory: stationary point has empty support");
  rep.rate = rate_infconv(a, rep.point.support, cfg.mu, cfg.alpha, cfg.beta, cfg.q,
                          rep.point.d_min);
  rep.alpha_star = alpha_star_infconv(a, rep.point.support, cfg.mu, cfg.q, rep.point.d_min);
  return rep;
}

} // namespace foldsolve
