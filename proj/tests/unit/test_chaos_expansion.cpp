#include <gtest/gtest.h>

#include <cmath>
#include <Eigen/LU>

#include "kss/chaos_expansion.hpp"
#include "kss/covariance_kernel.hpp"
#include "kss/error.hpp"
#include "oracles.hpp"

namespace {

const double kSqrtHalfPi = std::sqrt(kss::kPi / 2);

const kss::ChaosCoefficientTable& table_r1m2() {
  static const kss::ChaosCoefficientTable table(1, 2, 8);
  return table;
}

TEST(Hermite, ReferenceValuesAndExplicitSum) {
  EXPECT_DOUBLE_EQ(kss::hermite(0, 3.7), 1.0);
  EXPECT_DOUBLE_EQ(kss::hermite(2, 2.0), 3.0);
  EXPECT_DOUBLE_EQ(kss::hermite(3, 1.0), -2.0);
  for (int n = 0; n <= 12; ++n) {
    for (double x : {-2.5, -0.3, 0.0, 1.1, 3.0}) {
      const double ref = oracle::hermite(n, x);
      EXPECT_NEAR(kss::hermite(n, x), ref, 1e-10 * (1.0 + std::abs(ref)));
    }
  }
}

TEST(Mehler, ReferenceValues) {
  EXPECT_DOUBLE_EQ(kss::mehler_moment(2, 3, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(kss::mehler_moment(2, 2, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(kss::mehler_moment(0, 0, -0.2), 1.0);
}

TEST(Mehler, MatchesMonteCarlo) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double corr : {-0.6, 0.3, 0.8}) {
    for (int k = 1; k <= 3; ++k) {
      for (int l = 1; l <= 3; ++l) {
        oracle::Accumulator acc;
        for (int i = 0; i < 200000; ++i) {
          const double x = n(rng);
          const double w = corr * x + std::sqrt(1 - corr * corr) * n(rng);
          acc.add(oracle::hermite(k, x) * oracle::hermite(l, w));
        }
        EXPECT_NEAR(kss::mehler_moment(k, l, corr), acc.mean(), 4.0 * acc.se())
            << k << "," << l << " corr " << corr;
      }
    }
  }
}

TEST(BAlpha, ReferenceValues) {
  EXPECT_DOUBLE_EQ(kss::b_alpha(std::vector<int>{1}), 0.0);
  EXPECT_NEAR(kss::b_alpha(std::vector<int>{0}), 0.39894228, 1e-8);
  EXPECT_NEAR(kss::b_alpha(std::vector<int>{2}), -0.19947114, 1e-8);
  EXPECT_DOUBLE_EQ(kss::b_alpha(std::vector<int>{2, 3}), 0.0);
  // Hermite coefficients of the Gaussian density at 0: phi(0) H_{2k}(0) / (2k)!.
  for (int k = 0; k <= 4; ++k) {
    const double ref = oracle::hermite(2 * k, 0.0) / std::sqrt(2 * kss::kPi) / std::tgamma(2 * k + 1);
    EXPECT_NEAR(kss::b_alpha(std::vector<int>{2 * k}), ref, 1e-14);
  }
}

TEST(FBeta, ChiMeanAndParity) {
  EXPECT_NEAR(kss::f_beta(std::vector<int>{0, 0}, 1, 2), kSqrtHalfPi, 1e-12);
  EXPECT_NEAR(kss::f_beta(std::vector<int>{0, 0}, 1, 2), oracle::chi_mean(2), 1e-12);
  EXPECT_DOUBLE_EQ(kss::f_beta(std::vector<int>{1, 0}, 1, 2), 0.0);
  EXPECT_DOUBLE_EQ(kss::f_beta(std::vector<int>{2, 1}, 1, 2), 0.0);
  EXPECT_TRUE(kss::f_beta_vanishes(std::vector<int>{1, 1, 0, 0}, 2, 2));
}

TEST(FBeta, SecondOrderAgainstMonteCarlo) {
  // (1/2!) E[|G| H_2(G_1)], G standard normal in R^2.
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  oracle::Accumulator acc;
  for (int i = 0; i < 1000000; ++i) {
    const double g1 = n(rng), g2 = n(rng);
    acc.add(0.5 * std::hypot(g1, g2) * (g1 * g1 - 1.0));
  }
  const double value = kss::f_beta(std::vector<int>{2, 0}, 1, 2);
  EXPECT_NEAR(value, acc.mean(), 3.0 * acc.se());
  EXPECT_NEAR(value, kSqrtHalfPi / 4, 1e-12);
}

TEST(FBeta, QuadratureConvergesToClosedForm) {
  // |g| has a kink at the origin, so Gauss-Hermite converges only algebraically.
  kss::FBetaOptions coarse;
  coarse.method = kss::FBetaMethod::gauss_hermite;
  coarse.gh_nodes = 60;
  coarse.gh_tolerance = 5e-2;
  kss::FBetaOptions fine = coarse;
  fine.gh_nodes = 120;
  for (const std::vector<int>& beta : {std::vector<int>{2, 0}, {4, 0}, {2, 2}, {0, 6}, {4, 2}}) {
    const double closed = kss::f_beta(beta, 1, 2);
    const double e60 = std::abs(kss::f_beta(beta, 1, 2, coarse) - closed);
    const double e120 = std::abs(kss::f_beta(beta, 1, 2, fine) - closed);
    EXPECT_LT(e120, e60);
    EXPECT_LT(e120, 5e-3 * std::abs(closed));
  }
}

TEST(FBeta, TwoByTwoAgainstMonteCarlo) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> n(0.0, 1.0);
  oracle::Accumulator a0, a2;
  for (int i = 0; i < 400000; ++i) {
    Eigen::Matrix2d g;
    g << n(rng), n(rng), n(rng), n(rng);
    const double f = std::abs(g.determinant());
    a0.add(f);
    a2.add(0.5 * f * (g(0, 0) * g(0, 0) - 1.0));
  }
  EXPECT_NEAR(kss::f_beta(std::vector<int>{0, 0, 0, 0}, 2, 2), a0.mean(), 3.0 * a0.se());
  EXPECT_NEAR(kss::f_beta(std::vector<int>{2, 0, 0, 0}, 2, 2), a2.mean(), 3.0 * a2.se());
}

TEST(Lambda, ReferenceValues) {
  EXPECT_DOUBLE_EQ(kss::lambda_fourth_moment(0, 0, 0, 0, 0.2, 0.3, 0.4), 1.0);
  EXPECT_NEAR(kss::lambda_fourth_moment(2, 2, 0, 0, 0.3, 0.0, 0.0), 0.18, 1e-15);
  EXPECT_NEAR(kss::lambda_fourth_moment(2, 2, 0, 0, 0.3, 0.0, 0.0), kss::mehler_moment(2, 2, 0.3),
              1e-15);
  EXPECT_NEAR(kss::lambda_fourth_moment(1, 0, 0, 1, 0.0, 0.4, 0.0), 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(kss::lambda_fourth_moment(2, 1, 1, 1, 0.3, 0.2, 0.1), 0.0);
}

TEST(Lambda, MatchesMonteCarloFourthMoments) {
  // (Y(s), Ybar'_1(s), Y(t), Ybar'_1(t)) with the joint covariance at a fixed angle.
  const double theta = 0.45;
  const int d = 7;
  const Eigen::MatrixXd full = kss::joint_matrix(theta, d, 1);
  oracle::GaussianSampler sampler(full);
  const kss::CovarianceProfile p = kss::profile(theta, d, 1);
  std::mt19937_64 rng(31);
  const int cases[][4] = {{1, 1, 0, 0}, {0, 1, 1, 0}, {2, 1, 1, 2}, {1, 2, 2, 1}, {2, 2, 2, 2}};
  for (const auto& c : cases) {
    oracle::Accumulator acc;
    for (int i = 0; i < 400000; ++i) {
      const Eigen::VectorXd z = sampler.draw(rng);  // ys, yt, ds, dt
      acc.add(oracle::hermite(c[0], z[0]) * oracle::hermite(c[1], z[1]) *
              oracle::hermite(c[2], z[2]) * oracle::hermite(c[3], z[3]));
    }
    const double value = kss::lambda_fourth_moment(c[0], c[1], c[2], c[3], p.C, p.A, -p.A, p.B);
    EXPECT_NEAR(value, acc.mean(), 3.5 * acc.se()) << c[0] << c[1] << c[2] << c[3];
  }
}

TEST(Table, ParityZerosAndJsonRoundTrip) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  for (const auto& [beta, v] : t.f_table()) {
    if ((beta[0] + beta[1]) % 2 == 1 || beta[0] % 2 == 1 || beta[1] % 2 == 1) EXPECT_EQ(v, 0.0);
  }
  for (const auto& [alpha, v] : t.b_table()) {
    if (alpha[0] % 2 == 1) EXPECT_EQ(v, 0.0);
  }
  const auto back = kss::ChaosCoefficientTable::from_json(t.to_json());
  EXPECT_EQ(back.f_table(), t.f_table());
  EXPECT_EQ(back.b_table(), t.b_table());
  EXPECT_DOUBLE_EQ(back.norm_g_sq(4), t.norm_g_sq(4));
}

TEST(Table, ChaosNormsBoundedByFunctionalNorm) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  const double fnorm = kss::f_norm_sq(1, 2);
  EXPECT_DOUBLE_EQ(fnorm, 2.0);
  const double expected[] = {0.25, 0.1875, 0.12890625, 0.1044921875, 0.0902252197};
  for (int q = 0; q <= 8; q += 2) {
    EXPECT_NEAR(t.norm_g_sq(q), expected[q / 2], 1e-9);
    EXPECT_LE(t.norm_g_sq(q), fnorm / (2 * kss::kPi));
  }
  // Parseval for the derivative factor alone: sum beta! f_beta^2 increases to |f|^2.
  double partial = 0.0;
  for (int k = 0; k <= 8; ++k) {
    for (const auto& [beta, v] : t.f_table()) {
      if (beta[0] + beta[1] == k) partial += v * v * std::tgamma(beta[0] + 1) * std::tgamma(beta[1] + 1);
    }
    EXPECT_LE(partial, fnorm + 1e-12);
  }
  EXPECT_GT(partial, 0.95 * fnorm);
}

TEST(GQ, ConstantTermAndCentering) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  const std::vector<double> z{0.3, -1.2, 0.5};
  EXPECT_NEAR(kss::g_q_eval(0, z, t), 0.5, 1e-12);
  std::mt19937_64 rng(37);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int q : {2, 4}) {
    oracle::Accumulator acc;
    for (int i = 0; i < 200000; ++i) {
      const std::vector<double> x{n(rng), n(rng), n(rng)};
      acc.add(kss::g_q_eval(q, x, t));
    }
    EXPECT_NEAR(acc.mean(), 0.0, 3.5 * acc.se()) << "q=" << q;
  }
}

TEST(HTilde, ConstantOrderAndSymmetry) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  const double a0 = kss::b_alpha(std::vector<int>{0}) * kSqrtHalfPi;
  EXPECT_NEAR(kss::htilde_qd(0.3, 0, 10, t), a0 * a0, 1e-14);
  EXPECT_NEAR(a0 * a0, 0.24998, 1e-4);
  for (int q : {2, 4, 6, 8}) {
    for (int d : {5, 6, 25}) {
      for (double x : {0.05, 0.4, 0.77, 0.93, 0.999}) {
        EXPECT_EQ(kss::htilde_qd(x, q, d, t), kss::htilde_qd(-x, q, d, t));
      }
    }
    EXPECT_EQ(kss::htilde_qd(0.5, q + 1, 6, t), 0.0);
  }
}

TEST(HTilde, SecondChaosCovarianceMatchesMonteCarlo) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  const double theta = 0.7;
  const int d = 6;
  oracle::GaussianSampler sampler(kss::joint_matrix(theta, d, 2));
  std::mt19937_64 rng(41);
  oracle::Accumulator acc;
  for (int i = 0; i < 400000; ++i) {
    const Eigen::VectorXd z = sampler.draw(rng);  // ys, yt, ds1, ds2, dt1, dt2
    const std::vector<double> zs{z[0], z[2], z[3]};
    const std::vector<double> zt{z[1], z[4], z[5]};
    acc.add(kss::g_q_eval(2, zs, t) * kss::g_q_eval(2, zt, t));
  }
  EXPECT_NEAR(kss::htilde_at_angle(theta, 2, d, t), acc.mean(), 3.0 * acc.se());
}

TEST(HTilde, ArconesBound) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.05, kss::kPi - 0.05);
  int tested = 0;
  for (int i = 0; i < 400; ++i) {
    const double theta = u(rng);
    for (int d : {10, 50}) {
      const double psi = kss::arcones_psi_full(theta, d);
      if (psi >= 1.0) continue;
      for (int q : {2, 4}) {
        const double h = std::abs(kss::htilde_at_angle(theta, q, d, t));
        EXPECT_LE(h, std::pow(psi, q) * t.norm_g_sq(q) * (1 + 1e-9) + 1e-15);
        EXPECT_LE(h, std::pow(psi, q) * kss::f_norm_sq(1, 2) * (1 + 1e-9) + 1e-15);
        ++tested;
      }
    }
  }
  EXPECT_GT(tested, 100);
}

TEST(HTilde, TwoTermCoefficientIsNotABound) {
  // |C| + |A| ignores the derivative-derivative correlation B, which dominates
  // past the first zero of C; the bound then fails for that coefficient alone.
  const kss::ChaosCoefficientTable& t = table_r1m2();
  int exceeded = 0;
  for (int i = 1; i < 400; ++i) {
    const double theta = kss::kPi * i / 400.0;
    const double psi = kss::arcones_psi(theta, 50);
    if (psi >= 1.0) continue;
    const double h = std::abs(kss::htilde_at_angle(theta, 2, 50, t));
    exceeded += h > std::pow(psi, 2) * kss::f_norm_sq(1, 2) * (1 + 1e-9);
  }
  EXPECT_GT(exceeded, 0);
}

TEST(Variance, LimitTerms) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  EXPECT_NEAR(kss::chaos_variance_limit(2, t).value_limit, kss::kPi * kss::kPi / 2, 1e-8);
  EXPECT_NEAR(kss::chaos_variance_limit(4, t).value_limit, 1.262615, 1e-5);
  EXPECT_NEAR(kss::chaos_variance_limit(6, t).value_limit, 0.571475, 1e-5);
  EXPECT_NEAR(kss::chaos_variance_limit(8, t).value_limit, 0.325867, 1e-5);
  EXPECT_EQ(kss::chaos_variance_limit(3, t).value_limit, 0.0);
  EXPECT_EQ(kss::chaos_variance_term(5, 40, t).value_finite_d, 0.0);
}

TEST(Variance, FiniteDegreeConverges) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  const double v3 = kss::chaos_variance_term(2, 1000, t).value_finite_d;
  const double v4 = kss::chaos_variance_term(2, 10000, t).value_finite_d;
  EXPECT_LT(std::abs(v3 - v4), 0.02 * v4);
  EXPECT_LT(std::abs(v4 - kss::kPi * kss::kPi / 2), 0.01);
}

TEST(Variance, IntegrandDomination) {
  const kss::ChaosCoefficientTable& t = table_r1m2();
  const int d = 100;
  const double alpha = 0.15;
  for (int q : {2, 4}) {
    for (int i = 1; i <= 300; ++i) {
      const double z = 0.05 * i;
      if (z / std::sqrt(double(d)) >= kss::kPi / 2) break;
      const double integrand =
          std::sqrt(double(d)) * std::sin(z / std::sqrt(double(d))) *
          kss::htilde_at_angle(z / std::sqrt(double(d)), q, d, t);
      const double bound = std::pow(1 + z * z, q) * std::exp(-q * alpha * z * z);
      EXPECT_LE(std::abs(integrand), 2.0 * bound) << "q=" << q << " z=" << z;
    }
  }
}

}  // namespace
