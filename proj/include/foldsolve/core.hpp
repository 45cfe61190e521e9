#pragma once

// Dense linear-algebra substrate and the noise-folding problem model
//
//     y = A (u + v) + xi
//
// where u is the sparse signal, v the pre-measurement noise and xi the
// post-measurement noise.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace foldsolve {

using DenseMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class InternalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived> &x) {
  return x.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived> &x, const char *what) {
  if (!x.allFinite())
    throw InvalidInput(std::string(what) + " contains non-finite entries");
}

inline void require(bool condition, const std::string &message) {
  if (!condition)
    throw InvalidInput(message);
}

/// Singular value decomposition A = U diag(sigma) V_rᵀ.
///
/// The left basis is the full m×m orthogonal matrix; the right basis holds
/// only the r = min(m, n) right singular vectors paired with sigma. Singular
/// values are nonincreasing.
struct SvdFactors {
  DenseMatrix left_basis;
  RealVector singular_values;
  DenseMatrix right_basis;

  Index rank_slots() const { return singular_values.size(); }

  /// U_r Σ V_rᵀ, the thin reconstruction.
  DenseMatrix reconstruct() const {
    const Index r = rank_slots();
    return left_basis.leftCols(r) * singular_values.asDiagonal() *
           right_basis.transpose();
  }
};

inline SvdFactors compute_svd(const DenseMatrix &matrix) {
  require(matrix.rows() > 0 && matrix.cols() > 0, "compute_svd: empty matrix");
  require_finite(matrix, "compute_svd: matrix");
  Eigen::BDCSVD<DenseMatrix> svd(matrix, Eigen::ComputeFullU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw InternalError("compute_svd: decomposition did not converge");
  return SvdFactors{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline double spectral_norm(const DenseMatrix &matrix) {
  require_finite(matrix, "spectral_norm: matrix");
  if (matrix.size() == 0)
    return 0.0;
  if (matrix.rows() > 2 * matrix.cols() || matrix.cols() > 2 * matrix.rows()) {
    // Gram matrix on the short side is much cheaper than a full SVD.
    const DenseMatrix gram = matrix.rows() < matrix.cols()
                                 ? DenseMatrix(matrix * matrix.transpose())
                                 : DenseMatrix(matrix.transpose() * matrix);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
  }
  Eigen::BDCSVD<DenseMatrix> svd(matrix);
  return svd.singularValues()(0);
}

inline void require_valid_support(const DenseMatrix &matrix, const IndexSet &support) {
  for (Index i : support)
    require(i >= 0 && i < matrix.cols(), "support index out of range");
}

inline DenseMatrix columns(const DenseMatrix &matrix, const IndexSet &support) {
  require_valid_support(matrix, support);
  DenseMatrix out(matrix.rows(), static_cast<Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k)
    out.col(static_cast<Index>(k)) = matrix.col(support[k]);
  return out;
}

/// Smallest eigenvalue of A_Iᵀ A_I.
inline double min_singular_on_support(const DenseMatrix &matrix, const IndexSet &support) {
  require(!support.empty(), "min_singular_on_support: empty support");
  require_finite(matrix, "min_singular_on_support: matrix");
  const DenseMatrix sub = columns(matrix, support);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(sub.transpose() * sub,
                                                 Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues()(0));
}

inline IndexSet support_of(const RealVector &u) {
  IndexSet support;
  for (Index i = 0; i < u.size(); ++i)
    if (u(i) != 0.0)
      support.push_back(i);
  return support;
}

inline std::vector<int> sign_pattern(const RealVector &u) {
  std::vector<int> signs(static_cast<std::size_t>(u.size()));
  for (Index i = 0; i < u.size(); ++i)
    signs[static_cast<std::size_t>(i)] = (u(i) > 0) - (u(i) < 0);
  return signs;
}

inline IndexSet complement(const IndexSet &support, Index n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index i : support)
    in[static_cast<std::size_t>(i)] = true;
  IndexSet out;
  for (Index i = 0; i < n; ++i)
    if (!in[static_cast<std::size_t>(i)])
      out.push_back(i);
  return out;
}

struct ProblemInstance {
  DenseMatrix matrix;
  RealVector observation;
  std::optional<RealVector> ground_truth;
  std::optional<RealVector> pre_noise;
  std::optional<RealVector> post_noise;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }

  /// ‖A(u†+v)+ξ − y‖ / (1+‖y‖), or 0 when the components are not all known.
  double consistency_residual() const {
    if (!ground_truth || !pre_noise || !post_noise)
      return 0.0;
    const RealVector r = matrix * (*ground_truth + *pre_noise) + *post_noise - observation;
    return r.norm() / (1.0 + observation.norm());
  }

  void validate() const {
    require(matrix.rows() > 0 && matrix.cols() > 0, "problem: empty matrix");
    require_finite(matrix, "problem: matrix");
    require_finite(observation, "problem: observation");
    require(observation.size() == matrix.rows(),
            "problem: observation length must equal matrix rows");
    for (const auto *component : {&ground_truth, &pre_noise})
      if (*component)
        require((*component)->size() == matrix.cols(),
                "problem: signal component length must equal matrix columns");
    if (post_noise)
      require(post_noise->size() == matrix.rows(),
              "problem: post-noise length must equal matrix rows");
  }
};

inline ProblemInstance make_instance(DenseMatrix matrix, RealVector observation) {
  ProblemInstance p{std::move(matrix), std::move(observation), {}, {}, {}};
  p.validate();
  return p;
}

} // namespace foldsolve
