#pragma once

// Augmented single-penalty reduction of the multi-penalty problem.
//
// Minimizing ½‖A(u+v) − y‖² + (α/q)‖u‖_q^q + (β/2)‖v‖² over (u, v) is the
// same as minimizing ½‖B_β u − y_β‖² + (α/q)‖u‖_q^q over u and setting
// v = (βI + AᵀA)^{-1} Aᵀ(y − Au), with
//
//   B_β = (I + AAᵀ/β)^{-1/2} A,   y_β = (I + AAᵀ/β)^{-1/2} y.

#include "foldsolve/core.hpp"

#include <limits>
#include <optional>

namespace foldsolve {

struct AugmentedOperator {
  DenseMatrix b_matrix;
  RealVector y_beta;
  double beta = 1.0;
  SvdFactors source_svd;
};

namespace detail {

// Diagonal of (I + ΣΣᵀ/β)^{-1/2} on the first r slots.
inline RealVector whitening_diagonal(const RealVector &sigma, double beta) {
  return (1.0 + sigma.array().square() / beta).rsqrt().matrix();
}

} // namespace detail

inline AugmentedOperator build_augmented(const DenseMatrix &a, const RealVector &y, double beta,
                                         SvdFactors svd) {
  require(beta > 0.0 && std::isfinite(beta), "build_augmented: beta must be positive");
  require(y.size() == a.rows(), "build_augmented: observation length must equal matrix rows");
  require_finite(y, "build_augmented: observation");
  const Index r = svd.rank_slots();
  const RealVector d = detail::whitening_diagonal(svd.singular_values, beta);
  const auto u_r = svd.left_basis.leftCols(r);

  DenseMatrix b = u_r * (svd.singular_values.cwiseProduct(d)).asDiagonal() *
                  svd.right_basis.transpose();
  // Directions of U beyond r have σ = 0 and are left unchanged.
  RealVector y_beta =
      y + u_r * (d.array() - 1.0).matrix().cwiseProduct(u_r.transpose() * y);
  return {std::move(b), std::move(y_beta), beta, std::move(svd)};
}

inline AugmentedOperator build_augmented(const DenseMatrix &a, const RealVector &y,
                                         double beta) {
  require(beta > 0.0 && std::isfinite(beta), "build_augmented: beta must be positive");
  return build_augmented(a, y, beta, compute_svd(a));
}

/// (βI + AᵀA)^{-1} Aᵀ (y − Au) = V_r diag(σ/(β+σ²)) U_rᵀ (y − Au).
inline RealVector v_of_u(const DenseMatrix &a, const SvdFactors &svd, const RealVector &y,
                         const RealVector &u, double beta) {
  require(beta > 0.0, "v_of_u: beta must be positive");
  const Index r = svd.rank_slots();
  const RealVector residual = y - a * u;
  const RealVector gain =
      (svd.singular_values.array() / (beta + svd.singular_values.array().square())).matrix();
  return svd.right_basis *
         gain.cwiseProduct(svd.left_basis.leftCols(r).transpose() * residual);
}

inline RealVector v_of_u(const DenseMatrix &a, const RealVector &y, const RealVector &u,
                         double beta) {
  return v_of_u(a, compute_svd(a), y, u, beta);
}

struct OperatorBounds {
  double lipschitz = 0.0;
  double lambda_min_lower = 0.0;
};

/// L = ‖B_βᵀB_β‖ = (‖A‖^{-2} + β^{-1})^{-1}.
inline double augmented_lipschitz(double spec_norm_a, double beta) {
  if (spec_norm_a == 0.0)
    return 0.0;
  return 1.0 / (1.0 / (spec_norm_a * spec_norm_a) + 1.0 / beta);
}

inline OperatorBounds operator_bounds(const DenseMatrix &a, double beta, const IndexSet &support) {
  require(beta > 0.0, "operator_bounds: beta must be positive");
  const double norm_a = spectral_norm(a);
  const double shrink = 1.0 / (1.0 + norm_a * norm_a / beta);
  return {augmented_lipschitz(norm_a, beta), shrink * min_singular_on_support(a, support)};
}

/// Largest normalized inner product between distinct columns.
inline double coherence(const DenseMatrix &m) {
  require_finite(m, "coherence: matrix");
  const RealVector norms = m.colwise().norm().transpose();
  for (Index j = 0; j < norms.size(); ++j)
    if (norms(j) == 0.0)
      throw InvalidInput("coherence: matrix has a zero column");
  if (m.cols() < 2)
    return 0.0;
  const DenseMatrix normalized = m * norms.cwiseInverse().asDiagonal();
  DenseMatrix gram = normalized.transpose() * normalized;
  gram.diagonal().setZero();
  return std::min(1.0, gram.cwiseAbs().maxCoeff());
}

struct CoherenceReport {
  double coh_a = 0.0;
  double coh_b = 0.0;
  /// (1 + c)(coh(A) + c) with c = ‖A‖²/β.
  double remark_bound = 0.0;
  /// (1 + c) coh(A) + c; never larger than remark_bound.
  double lemma_bound = 0.0;
  double upper_bound = 0.0;
  /// coh((AAᵀ)^{-1/2} A); empty when A is not of full row rank.
  std::optional<double> whitened_limit;
  bool rank_deficient = false;
};

inline CoherenceReport coherence_report(const DenseMatrix &a, double beta) {
  require(beta > 0.0, "coherence_report: beta must be positive");
  CoherenceReport rep;
  SvdFactors svd = compute_svd(a);
  const double norm_a = svd.singular_values(0);
  const double c = norm_a * norm_a / beta;
  rep.coh_a = coherence(a);
  const AugmentedOperator aug = build_augmented(a, RealVector::Zero(a.rows()), beta, svd);
  rep.coh_b = coherence(aug.b_matrix);
  rep.remark_bound = (1.0 + c) * (rep.coh_a + c);
  rep.lemma_bound = (1.0 + c) * rep.coh_a + c;
  rep.upper_bound = std::min(rep.remark_bound, rep.lemma_bound);

  // (AAᵀ)^{-1/2} A = U_r V_rᵀ on the retained singular directions.
  const double cutoff = 1e-12 * norm_a;
  const Index r = svd.rank_slots();
  Index kept = 0;
  while (kept < r && svd.singular_values(kept) > cutoff)
    ++kept;
  rep.rank_deficient = kept < a.rows();
  if (!rep.rank_deficient) {
    const DenseMatrix whitened =
        svd.left_basis.leftCols(kept) * svd.right_basis.leftCols(kept).transpose();
    rep.whitened_limit = coherence(whitened);
  }
  return rep;
}

} // namespace foldsolve
