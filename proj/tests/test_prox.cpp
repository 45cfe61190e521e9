#include "foldsolve/prox.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace foldsolve;

TEST(ThresholdProfile, HalfPowerValues) {
  // q = 1/2, nu = mu = 1: lambda = (2 * 1/2)^{2/3} = 1, tau = (3/2)/1 * 1 = 1.5.
  const ThresholdProfile p = threshold_profile({0.5, 1.0, 1.0});
  EXPECT_NEAR(p.lambda_gap, 1.0, 1e-15);
  EXPECT_NEAR(p.tau, 1.5, 1e-15);
}

TEST(ThresholdProfile, HalfThresholdMatchesClassicalFormula) {
  // Half thresholding zeroes |u| <= (54^{1/3}/4) k^{2/3} with k = 2 mu nu.
  for (double k : {0.1, 0.7, 2.0, 9.0}) {
    const double tau = threshold_profile({0.5, k / 2.0, 1.0}).tau;
    EXPECT_NEAR(tau, std::cbrt(54.0) / 4.0 * std::pow(k, 2.0 / 3.0), 1e-12 * tau);
  }
}

TEST(ProxScalar, SoftThresholdAtQOne) {
  const ProxParams p{1.0, 0.5, 2.0};
  EXPECT_DOUBLE_EQ(prox_lq_scalar(3.0, p), 2.0);
  EXPECT_DOUBLE_EQ(prox_lq_scalar(-3.0, p), -2.0);
  EXPECT_DOUBLE_EQ(prox_lq_scalar(0.9, p), 0.0);
  EXPECT_DOUBLE_EQ(prox_lq_scalar(1.0, p), 0.0);
}

TEST(ProxScalar, TieAtThresholdMapsToZero) {
  const ProxParams p{0.5, 1.0, 1.0};
  EXPECT_EQ(prox_lq_scalar(1.5, p), 0.0);
  EXPECT_GE(std::abs(prox_lq_scalar(std::nextafter(1.5, 2.0), p)), 1.0 - 1e-9);
}

TEST(ProxScalar, RejectsInvalidParameters) {
  EXPECT_THROW(prox_lq_scalar(1.0, {0.0, 1.0, 1.0}), InvalidInput);
  EXPECT_THROW(prox_lq_scalar(1.0, {1.5, 1.0, 1.0}), InvalidInput);
  EXPECT_THROW(prox_lq_scalar(1.0, {0.5, -1.0, 1.0}), InvalidInput);
  EXPECT_THROW(prox_lq_scalar(1.0, {0.5, 1.0, 0.0}), InvalidInput);
}

TEST(ProxScalar, MatchesGridOracleAndStructuralProperties) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uq(0.05, 1.0), unu(0.05, 3.0), umu(0.05, 3.0),
      uu(-6.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double q = trial % 10 == 0 ? 1.0 : uq(rng);
    const ProxParams p{q, unu(rng), umu(rng)};
    const double u = uu(rng);
    const double z = prox_lq_scalar(u, p);
    const auto grid = oracle::prox_grid(u, p.q, p.nu, p.mu);
    EXPECT_LE(oracle::prox_objective(z, u, p.q, p.nu, p.mu), grid.second + 1e-8)
        << "u=" << u << " q=" << q;
    const ThresholdProfile prof = threshold_profile(p);
    if (z != 0.0) {
      // At q = 1 lambda is the soft-threshold kink, not a gap in the range.
      if (q < 1.0) {
        EXPECT_GE(std::abs(z), prof.lambda_gap * (1.0 - 1e-12));
      }
      EXPECT_LE(std::abs(z), std::abs(u));
      EXPECT_EQ(std::signbit(z), std::signbit(u));
    }
    if (q < 1.0) {
      EXPECT_EQ(z == 0.0, std::abs(u) <= prof.tau);
    }
    EXPECT_EQ(prox_lq_scalar(-u, p), -z);
  }
}

TEST(ProxScalar, MonotoneInInput) {
  const ProxParams p{0.3, 0.8, 1.2};
  double prev = prox_lq_scalar(-5.0, p);
  for (double u = -5.0; u <= 5.0; u += 0.01) {
    const double z = prox_lq_scalar(u, p);
    EXPECT_GE(z, prev - 1e-14);
    prev = z;
  }
}

TEST(ProxHalf, ClosedFormMatchesRootFinder) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unu(0.05, 3.0), umu(0.05, 3.0), uu(-8.0, 8.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double nu = unu(rng), mu = umu(rng), u = uu(rng);
    EXPECT_NEAR(prox_half_closed_form(u, nu, mu), prox_lq_scalar(u, {0.5, nu, mu}), 1e-10);
  }
}

TEST(ProxVector, AppliesComponentwise) {
  const ProxParams p{0.5, 1.0, 1.0};
  RealVector u(4);
  u << -3.0, 0.2, 1.4, 2.5;
  const RealVector z = prox_lq_vector(u, p);
  for (Index i = 0; i < u.size(); ++i)
    EXPECT_EQ(z(i), prox_lq_scalar(u(i), p));
}

TEST(ProxMoreau, MatchesNestedGridOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uq(0.2, 1.0), upos(0.2, 2.0), ux(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double q = uq(rng), nu = upos(rng), t = upos(rng), mu = upos(rng), lambda = upos(rng);
    const double x = ux(rng);
    RealVector xv(1);
    xv << x;
    const double z = prox_moreau(xv, t, {q, nu}, mu, lambda)(0);
    EXPECT_NEAR(z, oracle::moreau_prox(x, t, q, nu, mu, lambda), 1e-5);
  }
}

TEST(InfConv, ValueIsEnvelopeAndArgminAttains) {
  const InfConvPenaltyParams pen{0.7, 2.0, 0.5};
  RealVector w(3);
  w << -1.3, 0.05, 2.2;
  const InfConvEvaluation ev = infconv_value_and_argmin(w, pen);
  double expected = 0.0;
  for (Index i = 0; i < w.size(); ++i)
    expected += oracle::envelope(w(i), 1.0 / pen.beta, pen.q, pen.alpha / pen.q);
  EXPECT_NEAR(ev.value, expected, 1e-8);
  EXPECT_EQ(ev.argmin(1), 0.0);
}

TEST(InfConv, ProxOfGMatchesMoreauReduction) {
  const InfConvPenaltyParams pen{0.4, 3.0, 0.5};
  RealVector w(2);
  w << 1.7, -0.4;
  const RealVector z = prox_infconv_g(w, pen, 0.3);
  for (Index i = 0; i < 2; ++i)
    EXPECT_NEAR(z(i), oracle::moreau_prox(w(i), 1.0 / pen.beta, pen.q, pen.alpha / pen.q, 0.3, 1.0),
                1e-5);
}
