#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// They deliberately avoid the library's own algorithms.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

/// Minimizes a continuous scalar function on [lo, hi] by repeated grid zooming
/// around the best grid point. Returns {argmin, value}.
inline std::pair<double, double> zoom_minimize(const std::function<double(double)> &f, double lo,
                                               double hi, int points = 2001, int levels = 6) {
  double best_x = lo, best_f = f(lo);
  for (int level = 0; level < levels; ++level) {
    const double h = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
      const double x = lo + h * i;
      const double fx = f(x);
      if (fx < best_f) {
        best_f = fx;
        best_x = x;
      }
    }
    const double a = std::max(lo, best_x - 2 * h);
    const double b = std::min(hi, best_x + 2 * h);
    lo = a;
    hi = b;
    if (hi - lo < 1e-15)
      break;
  }
  return {best_x, best_f};
}

/// Objective of the scalar lq prox.
inline double prox_objective(double z, double u, double q, double nu, double mu) {
  return (z - u) * (z - u) / (2.0 * mu) + nu * std::pow(std::abs(z), q);
}

/// Minimum of the prox objective over z, from a grid on [-|u|-1, |u|+1] plus z = 0.
inline std::pair<double, double> prox_grid(double u, double q, double nu, double mu) {
  const double r = std::abs(u) + 1.0;
  auto f = [&](double z) { return prox_objective(z, u, q, nu, mu); };
  auto best = zoom_minimize(f, -r, r, 4001, 6);
  if (f(0.0) <= best.second)
    best = {0.0, f(0.0)};
  return best;
}

/// Moreau envelope M_{t,f}(x) of f = nu|.|^q by zoomed grid search over y.
inline double envelope(double x, double t, double q, double nu) {
  auto g = [&](double y) { return nu * std::pow(std::abs(y), q) + (x - y) * (x - y) / (2.0 * t); };
  const double r = std::abs(x) + 1.0;
  const double grid = zoom_minimize(g, -r, r, 201, 5).second;
  return std::min(grid, g(0.0));
}

/// prox_{mu, lambda M_{t,f}}(x) by a nested grid search.
inline double moreau_prox(double x, double t, double q, double nu, double mu, double lambda) {
  auto phi = [&](double z) { return (z - x) * (z - x) / (2.0 * mu) + lambda * envelope(z, t, q, nu); };
  const double r = std::abs(x) + 1.0;
  return zoom_minimize(phi, -r, r, 401, 5).first;
}

/// δ_s by explicit submatrix SVDs over all supports, enumerated recursively.
struct RipResult {
  double delta = -1.0;
  std::vector<int> witness;
};

inline void rip_recurse(const Eigen::MatrixXd &a, int s, int start, std::vector<int> &chosen,
                        RipResult &best) {
  if (static_cast<int>(chosen.size()) == s) {
    Eigen::MatrixXd sub(a.rows(), s);
    for (int k = 0; k < s; ++k)
      sub.col(k) = a.col(chosen[k]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
    const auto &sv = svd.singularValues();
    const double dev = std::max(sv(0) - 1.0, 1.0 - sv(s - 1));
    if (dev > best.delta) {
      best.delta = dev;
      best.witness = chosen;
    }
    return;
  }
  for (int j = start; j < a.cols(); ++j) {
    chosen.push_back(j);
    rip_recurse(a, s, j + 1, chosen, best);
    chosen.pop_back();
  }
}

inline RipResult rip(const Eigen::MatrixXd &a, int s) {
  RipResult best;
  std::vector<int> chosen;
  rip_recurse(a, s, 0, chosen, best);
  best.delta = std::max(0.0, best.delta);
  return best;
}

/// Largest |<a_i, a_j>| / (‖a_i‖‖a_j‖) over pairs, by explicit loops.
inline double pairwise_coherence(const Eigen::MatrixXd &m) {
  double best = 0.0;
  for (int i = 0; i < m.cols(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      best = std::max(best, std::abs(m.col(i).dot(m.col(j))) / (m.col(i).norm() * m.col(j).norm()));
  return best;
}

/// (I + AAᵀ/β)^{-1/2} through a symmetric eigendecomposition.
inline Eigen::MatrixXd inverse_sqrt_factor(const Eigen::MatrixXd &a, double beta) {
  const Eigen::MatrixXd k =
      Eigen::MatrixXd::Identity(a.rows(), a.rows()) + a * a.transpose() / beta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64 &rng, int m, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = nd(rng);
  return a;
}

inline Eigen::VectorXd random_vector(std::mt19937_64 &rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

} // namespace oracle
