#include "foldsolve/experiments.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace foldsolve;

namespace {

IterationTrace synthetic_trace(const std::vector<double> &errors) {
  IterationTrace t;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    IterationRecord rec;
    rec.iter = static_cast<Index>(k);
    rec.err_to_ref = errors[k];
    t.records.push_back(rec);
  }
  return t;
}

} // namespace

TEST(RateAugmented, WorkedExample) {
  const RateBound rb = rate_augmented(1.0, 1.0, 0.5, 0.0, 0.5, rip_floor(0.0), 1.0);
  EXPECT_NEAR(rb.constant, 0.75, 1e-15);
  EXPECT_TRUE(rb.admissible);
}

TEST(RateAugmented, QOneHasUnitDenominator) {
  const RateBound rb = rate_augmented(2.0, 0.5, 0.05, 3.0, 1.0, 0.4, 0.01);
  EXPECT_EQ(rb.components.at("denominator"), 1.0);
  EXPECT_TRUE(std::isinf(alpha_star_augmented(2.0, 0.5, 0.4, 1.0, 0.01).alpha_star));
}

TEST(RateAugmented, AlphaStarBoundary) {
  const double a_star = alpha_star_augmented(1.0, 1.0, rip_floor(0.0), 0.5, 2.0).alpha_star;
  EXPECT_NEAR(a_star, 1.0, 1e-15);
  EXPECT_TRUE(rate_augmented(1.0, 1.0, 0.5, 0.99 * a_star, 0.5, 1.0, 2.0).admissible);
  const RateBound over = rate_augmented(1.0, 1.0, 0.5, 1.01 * a_star, 0.5, 1.0, 2.0);
  EXPECT_FALSE(over.admissible);
  EXPECT_FALSE(over.diagnostic.empty());
}

TEST(RateAugmented, StepBeyondLimitIsNotAdmissible) {
  // 1/L = ‖A‖^-2 + β^-1 = 2.
  const RateBound rb = rate_augmented(1.0, 1.0, 2.5, 0.0, 0.5, 1.0, 1.0);
  EXPECT_FALSE(rb.admissible);
  EXPECT_THROW(rate_augmented(1.0, 1.0, 0.5, 0.0, 0.5, 1.0, 0.0), InvalidInput);
}

TEST(RateAugmented, MonotoneOnParameterGrids) {
  const double norm_a = 1.7, mu = 0.3, q = 0.5, d_min = 0.8;
  for (double beta : {0.1, 1.0, 10.0}) {
    double prev = -INFINITY;
    for (double alpha = 0.0; alpha < 0.05; alpha += 0.005) {
      const double c = rate_augmented(norm_a, beta, mu, alpha, q, 0.5, d_min).constant;
      EXPECT_GE(c, prev);
      prev = c;
    }
    prev = INFINITY;
    for (double lam = 0.0; lam <= 1.0; lam += 0.1) {
      const double c = rate_augmented(norm_a, beta, mu, 0.01, q, lam, d_min).constant;
      EXPECT_LE(c, prev);
      prev = c;
    }
  }
  double prev_shrink = 0.0;
  for (double beta = 0.01; beta < 100.0; beta *= 2.0) {
    const double s = rate_augmented(norm_a, beta, mu, 0.0, q, 0.5, d_min).components.at("shrink");
    EXPECT_GT(s, prev_shrink);
    prev_shrink = s;
  }
}

TEST(RateInfconv, QOneAndIsometry) {
  const DenseMatrix eye = DenseMatrix::Identity(4, 4);
  const RateBound rb = rate_infconv(eye, {0, 2}, 1.0, 0.0, 1.0, 1.0, 1.0);
  EXPECT_EQ(rb.components.at("denominator"), 1.0);
  EXPECT_NEAR(rb.components.at("on_support_norm"), 0.0, 1e-15);
  EXPECT_NEAR(rb.components.at("on_support_term"), 0.0, 1e-15);
  // μ‖A‖² = 1 sits on the boundary of μ < ‖A‖^-2.
  EXPECT_FALSE(rb.admissible);
  EXPECT_TRUE(std::isinf(alpha_star_infconv(eye, {0}, 0.5, 1.0, 1.0).alpha_star));
  EXPECT_NEAR(alpha_star_infconv(eye, {0}, 1.0, 0.5, 2.0).alpha_star, 2.0, 1e-14);
}

TEST(RateInfconv, RandomInstanceNormsBelowOne) {
  std::mt19937_64 rng(12);
  const DenseMatrix a = oracle::random_matrix(rng, 50, 100, 1.0 / std::sqrt(50.0));
  const double norm_a = spectral_norm(a);
  const double mu = 0.95 / (norm_a * norm_a);
  const IndexSet support{3, 17, 40, 71, 99};
  const RateBound rb = rate_infconv(a, support, mu, 0.0, 1.0, 0.5, 1.0);
  EXPECT_LT(rb.components.at("on_support_norm"), 1.0);
  EXPECT_LT(rb.components.at("off_support_norm"), 1.0 + 1e-12);

  // Oracle: assemble P_I (I - μAᵀA) explicitly.
  DenseMatrix it = DenseMatrix::Identity(100, 100) - mu * a.transpose() * a;
  DenseMatrix rows(5, 100);
  for (int k = 0; k < 5; ++k)
    rows.row(k) = it.row(support[static_cast<std::size_t>(k)]);
  EXPECT_NEAR(rb.components.at("on_support_norm"),
              Eigen::JacobiSVD<DenseMatrix>(rows).singularValues()(0), 1e-10);

  const double beta = 1e3, q = 0.5, d_min = 0.5;
  const double a_star = alpha_star_infconv(a, support, mu, q, d_min).alpha_star;
  const RateBound big = rate_infconv(a, support, mu, 0.9 * a_star, beta, q, d_min);
  EXPECT_TRUE(big.admissible) << big.constant;
}

TEST(RateInfconv, Errors) {
  const DenseMatrix eye = DenseMatrix::Identity(3, 3);
  EXPECT_THROW(rate_infconv(eye, {}, 0.5, 0.0, 1.0, 0.5, 1.0), InvalidInput);
  EXPECT_THROW(rate_infconv(eye, {0, 1, 2}, 0.5, 0.0, 1.0, 0.5, 1.0), InvalidInput);
  const RateBound rb = rate_infconv(eye, {0}, 0.5, 1e6, 1.0, 0.5, 1.0);
  EXPECT_FALSE(rb.admissible);
  EXPECT_TRUE(std::isinf(rb.constant));
}

TEST(Rip, OrthonormalColumnsHaveZeroDelta) {
  const DenseMatrix q = compute_svd(DenseMatrix::Identity(6, 4) + DenseMatrix::Ones(6, 4)).left_basis.leftCols(4);
  for (Index s = 1; s <= 4; ++s)
    EXPECT_NEAR(rip_bruteforce(q, s).delta, 0.0, 1e-12);
}

TEST(Rip, DuplicatedColumn) {
  DenseMatrix a = DenseMatrix::Zero(3, 2);
  a(0, 0) = a(0, 1) = 1.0;
  EXPECT_NEAR(rip_bruteforce(a, 2).delta, 1.0, 1e-12);
}

TEST(Rip, OrderOneIsColumnNormDeviation) {
  std::mt19937_64 rng(13);
  const DenseMatrix a = oracle::random_matrix(rng, 20, 30, 1.0 / std::sqrt(20.0));
  double dev = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    dev = std::max(dev, std::abs(a.col(j).norm() - 1.0));
  EXPECT_NEAR(rip_bruteforce(a, 1).delta, dev, 1e-12);
}

TEST(Rip, MatchesExhaustiveOracleAndIsMonotone) {
  std::mt19937_64 rng(14);
  const DenseMatrix a = oracle::random_matrix(rng, 20, 30, 1.0 / std::sqrt(20.0));
  double prev = 0.0;
  for (int s = 1; s <= 3; ++s) {
    const RipEstimate est = rip_bruteforce(a, s);
    const oracle::RipResult ref = oracle::rip(a, s);
    EXPECT_NEAR(est.delta, ref.delta, 1e-12);
    EXPECT_EQ(est.witness.size(), static_cast<std::size_t>(s));
    EXPECT_GE(est.delta, prev);
    prev = est.delta;
  }
}

TEST(Rip, EnumerationGuard) {
  const DenseMatrix a = DenseMatrix::Identity(10, 100);
  try {
    rip_bruteforce(a, 5);
    FAIL() << "expected refusal";
  } catch (const InvalidInput &e) {
    EXPECT_NE(std::string(e.what()).find("75287520"), std::string::npos) << e.what();
  }
  EXPECT_THROW(rip_bruteforce(a, 0), InvalidInput);
}

TEST(RipGaussianOrder, Scaling) {
  EXPECT_NEAR(rip_gaussian_order(400, 600, 20).delta / rip_gaussian_order(100, 600, 20).delta, 0.5,
              1e-14);
  EXPECT_NEAR(rip_gaussian_order(50, 30, 30, 2.0).delta, 2.0 * std::sqrt(30.0 / 50.0), 1e-14);
  double prev = INFINITY;
  for (Index m : {100, 200, 300, 400}) {
    const double d = rip_gaussian_order(m, 600, 20).delta;
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(EmpiricalRate, ExactGeometric) {
  std::vector<double> e;
  for (int k = 0; k < 100; ++k)
    e.push_back(3.0 * std::pow(0.8, k));
  EXPECT_NEAR(empirical_rate(synthetic_trace(e)), 0.8, 1e-12);
}

TEST(EmpiricalRate, ConstantErrors) {
  EXPECT_NEAR(empirical_rate(synthetic_trace(std::vector<double>(50, 0.1))), 1.0, 1e-15);
}

TEST(EmpiricalRate, NoisyGeometric) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (double r : {0.5, 0.9, 0.99}) {
    std::vector<double> e;
    for (int k = 0; k < 200; ++k)
      e.push_back(std::pow(r, k) * (1.0 + noise(rng)));
    EXPECT_NEAR(empirical_rate(synthetic_trace(e)), r, 0.02);
  }
}

TEST(EmpiricalRate, IgnoresFloorAndPreStabilizationRecords) {
  std::vector<double> e;
  for (int k = 0; k < 80; ++k)
    e.push_back(std::pow(0.7, k));
  for (int k = 0; k < 20; ++k)
    e.push_back(0.0);
  IterationTrace t = synthetic_trace(e);
  EXPECT_NEAR(empirical_rate(t), 0.7, 1e-12);
  // A sign change at record 50 leaves only 30 usable points; 30% of them is < 10.
  for (std::size_t k = 0; k < t.records.size(); ++k)
    t.records[k].signs = {static_cast<std::int8_t>(k < 50 ? 1 : -1)};
  EXPECT_THROW(empirical_rate(t), UndefinedRate);
  EXPECT_NEAR(empirical_rate(t, 1.0), 0.7, 1e-12);
}

TEST(EmpiricalRate, TooShortTrace) {
  EXPECT_THROW(empirical_rate(synthetic_trace({1.0, 0.5, 0.25})), UndefinedRate);
  EXPECT_THROW(empirical_rate(synthetic_trace(std::vector<double>(100, NAN))), UndefinedRate);
  EXPECT_THROW(empirical_rate(synthetic_trace({1.0}), 0.0), InvalidInput);
}

TEST(Theory, AugmentedRunIsBoundedByConstant) {
  MatrixEnsemble e{EnsembleKind::gaussian, EntryLaw::gaussian, 60, 120, 3, 0};
  const ProblemInstance p = make_problem(e, {5, {}}, {0.01, 0.01});
  const double norm_a = spectral_norm(p.matrix);
  SolverConfig cfg;
  cfg.alpha = 1e-3;
  cfg.beta = 0.5;
  cfg.q = 0.5;
  cfg.mu = 0.99 / augmented_lipschitz(norm_a, cfg.beta);
  const SolverResult r = solve_with_reference(SolverKind::augmented, p, cfg);
  const TheoryReport th = augmented_theory(p.matrix, cfg, r.u);
  ASSERT_FALSE(th.point.support.empty());
  EXPECT_GT(th.alpha_star.alpha_star, 0.0);
  if (th.rate.admissible) {
    EXPECT_LE(empirical_rate(r.trace), th.rate.constant + 0.02);
  }
  EXPECT_THROW(augmented_theory(p.matrix, cfg, RealVector::Zero(120)), UndefinedRate);
}
