#pragma once

// Proximal maps of the lq quasi-norm penalty nu*|z|^q, 0 < q <= 1, and of the
// infimal convolution (alpha/q)||.||_q^q [] (beta/2)||.||^2.

#include "foldsolve/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace foldsolve {

/// Exponent q, weight nu and step mu of prox_{mu, nu|.|^q}.
struct ProxParams {
  double q = 1.0;
  double nu = 1.0;
  double mu = 1.0;

  void validate() const {
    require(q > 0.0 && q <= 1.0, "prox: exponent q must lie in (0, 1]");
    require(nu > 0.0 && std::isfinite(nu), "prox: weight nu must be positive");
    require(mu > 0.0 && std::isfinite(mu), "prox: step mu must be positive");
  }
};

/// The ν|·|^q penalty without a step size.
struct LqPenalty {
  double q = 1.0;
  double nu = 1.0;

  ProxParams with_step(double mu) const { return {q, nu, mu}; }
};

/// Jump threshold tau and range gap lambda of the scalar prox.
///
/// For q < 1 the prox is zero on |u| <= tau and takes values of magnitude
/// at least lambda elsewhere. For q = 1 both collapse to the soft-threshold
/// kink mu*nu.
struct ThresholdProfile {
  double tau = 0.0;
  double lambda_gap = 0.0;
};

inline ThresholdProfile threshold_profile(const ProxParams &p) {
  p.validate();
  if (p.q == 1.0)
    return {p.mu * p.nu, p.mu * p.nu};
  const double gap = std::pow(2.0 * p.mu * p.nu * (1.0 - p.q), 1.0 / (2.0 - p.q));
  return {(2.0 - p.q) / (2.0 - 2.0 * p.q) * gap, gap};
}

inline double soft_threshold(double u, double level) {
  const double a = std::abs(u) - level;
  return a > 0.0 ? std::copysign(a, u) : 0.0;
}

/// Sum of |u_i|^q.
template <typename Derived>
double lq_sum(const Eigen::MatrixBase<Derived> &u, double q) {
  if (q == 1.0)
    return u.template lpNorm<1>();
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i)
    if (u(i) != 0.0)
      s += std::pow(std::abs(u(i)), q);
  return s;
}

namespace detail {

// Larger root of z + c z^{q-1} = a on [lo, hi] where h(lo) < 0 < h(hi).
// h is increasing and convex there, so Newton from hi descends monotonically;
// bisection takes over whenever a step leaves the bracket.
inline double lq_branch_root(double a, double c, double q, double lo, double hi) {
  constexpr int kMaxIters = 200;
  constexpr double kRelTol = 1e-13;
  auto h = [&](double z) { return z + c * std::pow(z, q - 1.0) - a; };
  double z = hi;
  for (int it = 0; it < kMaxIters; ++it) {
    const double hz = h(z);
    if (hz == 0.0)
      return z;
    if (hz > 0.0)
      hi = z;
    else
      lo = z;
    const double dh = 1.0 + c * (q - 1.0) * std::pow(z, q - 2.0);
    double next = z - hz / dh;
    if (!(dh > 0.0) || !(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= kRelTol * std::abs(next) || hi - lo <= kRelTol * hi)
      return next;
    z = next;
  }
  std::ostringstream msg;
  msg.precision(17);
  msg << "prox root-finder did not converge: a=" << a << " c=" << c << " q=" << q
      << " bracket=[" << lo << ", " << hi << "]";
  throw InternalError(msg.str());
}

} // namespace detail

/// argmin_z (1/(2 mu)) (z - u)^2 + nu |z|^q. Ties at |u| = tau map to 0.
inline double prox_lq_scalar(double u, const ProxParams &p) {
  p.validate();
  if (u == 0.0)
    return 0.0;
  if (p.q == 1.0)
    return soft_threshold(u, p.mu * p.nu);
  const ThresholdProfile prof = threshold_profile(p);
  const double a = std::abs(u);
  if (a <= prof.tau)
    return 0.0;
  const double z =
      detail::lq_branch_root(a, p.nu * p.mu * p.q, p.q, prof.lambda_gap, a);
  return std::copysign(z, u);
}

/// Closed-form prox for q = 1/2 (half thresholding).
///
/// With k = 2 mu nu the nonzero branch is
///   (2/3) u (1 + cos(2pi/3 - (2/3) acos((k/8) (|u|/3)^{-3/2}))).
inline double prox_half_closed_form(double u, double nu, double mu) {
  const ProxParams p{0.5, nu, mu};
  p.validate();
  const double tau = threshold_profile(p).tau;
  if (std::abs(u) <= tau)
    return 0.0;
  const double k = 2.0 * mu * nu;
  const double arg = std::clamp(k / 8.0 * std::pow(std::abs(u) / 3.0, -1.5), -1.0, 1.0);
  const double phi = std::acos(arg);
  return 2.0 / 3.0 * u *
         (1.0 + std::cos(2.0 * std::numbers::pi / 3.0 - 2.0 / 3.0 * phi));
}

inline RealVector prox_lq_vector(const RealVector &u, const ProxParams &p) {
  p.validate();
  RealVector out(u.size());
  for (Index i = 0; i < u.size(); ++i)
    out(i) = prox_lq_scalar(u(i), p);
  return out;
}

/// prox_{mu, lambda M_{t,f}}(x) for f = nu|.|^q, via the reduction to
/// prox_{t + mu lambda, f}.
inline RealVector prox_moreau(const RealVector &x, double t, const LqPenalty &f, double mu,
                              double lambda) {
  require(t > 0.0 && mu > 0.0 && lambda > 0.0, "prox_moreau: t, mu, lambda must be positive");
  const double s = t + mu * lambda;
  return (t / s) * x + (mu * lambda / s) * prox_lq_vector(x, f.with_step(s));
}

struct InfConvPenaltyParams {
  double alpha = 1.0;
  double beta = 1.0;
  double q = 1.0;

  void validate() const {
    require(alpha > 0.0 && std::isfinite(alpha), "infconv: alpha must be positive");
    require(beta > 0.0 && std::isfinite(beta), "infconv: beta must be positive");
    require(q > 0.0 && q <= 1.0, "infconv: exponent q must lie in (0, 1]");
  }

  LqPenalty lq() const { return {q, alpha / q}; }
};

/// prox_{mu, g} with g = (alpha/q)||.||_q^q [] (beta/2)||.||^2, which is the
/// Moreau envelope of the lq term with t = 1/beta.
inline RealVector prox_infconv_g(const RealVector &w, const InfConvPenaltyParams &pen,
                                 double mu) {
  pen.validate();
  return prox_moreau(w, 1.0 / pen.beta, pen.lq(), mu, 1.0);
}

struct InfConvEvaluation {
  double value = 0.0;
  RealVector argmin;
};

/// g(w) and the u attaining the infimum.
inline InfConvEvaluation infconv_value_and_argmin(const RealVector &w,
                                                  const InfConvPenaltyParams &pen) {
  pen.validate();
  RealVector u = prox_lq_vector(w, pen.lq().with_step(1.0 / pen.beta));
  const double value =
      pen.alpha / pen.q * lq_sum(u, pen.q) + 0.5 * pen.beta * (w - u).squaredNorm();
  return {value, std::move(u)};
}

} // namespace foldsolve
