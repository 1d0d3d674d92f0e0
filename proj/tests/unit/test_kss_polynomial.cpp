#include <gtest/gtest.h>

#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <json.hpp>
#include <set>

#include "kss/error.hpp"
#include "kss/kss_polynomial.hpp"
#include "oracles.hpp"

namespace {

using kss::KssSystem;
using kss::SpherePoint;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

SpherePoint random_point(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(m + 1);
  for (int k = 0; k <= m; ++k) v[k] = n(rng);
  return SpherePoint::normalized(v);
}

TEST(MultiIndex, SmallListing) {
  const auto idx = kss::enumerate_multi_indices(1, 2);
  ASSERT_EQ(idx.size(), 3u);
  EXPECT_EQ(idx[0], (kss::MultiIndex{2, 0}));
  EXPECT_EQ(idx[1], (kss::MultiIndex{1, 1}));
  EXPECT_EQ(idx[2], (kss::MultiIndex{0, 2}));
  EXPECT_EQ(kss::enumerate_multi_indices(2, 3).size(), 10u);
}

TEST(MultiIndex, CountsMatchPascal) {
  for (int m = 1; m <= 3; ++m) {
    for (int d : {1, 2, 7, 30, 100}) {
      EXPECT_EQ(kss::multi_index_count(m, d), oracle::binomial(d + m, m));
    }
  }
  EXPECT_EQ(kss::enumerate_multi_indices(2, 100).size(), 5151u);
  EXPECT_THROW(kss::multi_index_count(40, 1000000), kss::DomainError);
}

TEST(MultiIndex, LexicographicExhaustiveAndIndexed) {
  const auto idx = kss::enumerate_multi_indices(3, 6);
  std::set<kss::MultiIndex> seen(idx.begin(), idx.end());
  EXPECT_EQ(seen.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    int total = 0;
    for (int x : idx[i]) total += x;
    EXPECT_EQ(total, 6);
    if (i > 0) EXPECT_TRUE(std::lexicographical_compare(idx[i].begin(), idx[i].end(),
                                                        idx[i - 1].begin(), idx[i - 1].end()));
    EXPECT_EQ(kss::multi_index_position(idx[i]), i);
  }
}

TEST(Coefficients, ScaleIsSquareRootMultinomial) {
  EXPECT_DOUBLE_EQ(kss::kss_coefficient_scale(std::vector<int>{7, 0, 0}), 1.0);
  EXPECT_NEAR(std::pow(kss::kss_coefficient_scale(std::vector<int>{1, 1}), 2), 2.0, 1e-14);
  for (const auto& j : kss::enumerate_multi_indices(2, 12)) {
    const double expected = std::sqrt(static_cast<double>(oracle::multinomial(j)));
    EXPECT_NEAR(kss::kss_coefficient_scale(j), expected, 1e-12 * expected);
  }
}

TEST(Coefficients, UnitVarianceIdentity) {
  // sum_j multinomial(d; j) t^{2j} = |t|^{2d} = 1 on the sphere.
  std::mt19937_64 rng(1);
  const auto idx = kss::enumerate_multi_indices(2, 9);
  for (int rep = 0; rep < 200; ++rep) {
    const SpherePoint t = random_point(2, rng);
    long double total = 0.0L;
    for (const auto& j : idx) {
      long double mono = oracle::multinomial(j);
      for (int k = 0; k < 3; ++k) mono *= std::pow(static_cast<long double>(t[k]), 2 * j[k]);
      total += mono;
    }
    EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-10);
  }
}

TEST(Sampling, DeterministicFromSeed) {
  const KssSystem a = kss::sample_kss(2, 10, 2, 77);
  const KssSystem b = kss::sample_kss(2, 10, 2, 77);
  const KssSystem c = kss::sample_kss(2, 10, 2, 78);
  EXPECT_EQ(a.coeffs(), b.coeffs());
  EXPECT_NE(a.coeffs(), c.coeffs());
  EXPECT_THROW(kss::sample_kss(2, 1, 1, 0), kss::DomainError);
  EXPECT_THROW(kss::sample_kss(2, 4, 3, 0), kss::DomainError);
}

TEST(Sampling, CoefficientVarianceForMixedIndex) {
  // m = 1, d = 2: the (1,1) coefficient has variance 2.
  oracle::Accumulator acc;
  for (int s = 0; s < 20000; ++s) {
    const double c = kss::sample_kss(1, 2, 1, 1000 + s).coeffs()(0, 1);
    acc.add(c * c);
  }
  EXPECT_NEAR(acc.mean(), 2.0, 3.0 * acc.se());
}

TEST(Sampling, CovarianceIsInnerProductPower) {
  const int d = 5;
  std::mt19937_64 rng(4);
  const SpherePoint s = random_point(2, rng);
  const SpherePoint t = random_point(2, rng);
  std::vector<double> ys, yt;
  for (int i = 0; i < 100000; ++i) {
    const KssSystem sys = kss::sample_kss(2, d, 1, 5000000 + i);
    ys.push_back(kss::evaluate(sys, s.coords())[0]);
    yt.push_back(kss::evaluate(sys, t.coords())[0]);
  }
  const auto cov = oracle::sample_covariance(ys, yt);
  EXPECT_NEAR(cov.value, std::pow(s.coords().dot(t.coords()), d), 3.0 * cov.se);
  const auto var = oracle::sample_covariance(ys, ys);
  EXPECT_NEAR(var.value, 1.0, 3.0 * var.se);
}

TEST(Evaluation, MatchesNaiveSum) {
  const KssSystem sys = kss::sample_kss(3, 7, 2, 8);
  const auto idx = kss::enumerate_multi_indices(3, 7);
  const Eigen::VectorXd t = vec({0.3, -1.2, 0.7, 2.0});
  const Eigen::VectorXd y = kss::evaluate(sys, t);
  for (int l = 0; l < 2; ++l) {
    std::vector<double> c(sys.coeffs().cols());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = sys.coeffs()(l, i);
    const double ref = oracle::naive_polynomial(idx, c, t);
    EXPECT_NEAR(y[l], ref, 1e-11 * (1.0 + std::abs(ref)));
  }
}

TEST(Evaluation, FixturesAndHomogeneity) {
  const KssSystem pure = KssSystem::from_terms(2, 3, {{{3, 0, 0}, 1.0}});
  EXPECT_DOUBLE_EQ(kss::evaluate(pure, vec({1, 0, 0}))[0], 1.0);
  const Eigen::VectorXd t = vec({0.4, -0.3, 0.9});
  EXPECT_NEAR(kss::evaluate(pure, 2.0 * t)[0], 8.0 * kss::evaluate(pure, t)[0], 1e-14);
  const KssSystem sys = kss::sample_kss(2, 6, 1, 2);
  EXPECT_NEAR(kss::evaluate(sys, -1.7 * t)[0], std::pow(1.7, 6) * kss::evaluate(sys, t)[0], 1e-10);
  Eigen::VectorXd bad = t;
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(kss::evaluate(sys, bad), kss::DomainError);
}

TEST(Evaluation, GradientMatchesFiniteDifferences) {
  const KssSystem sys = kss::sample_kss(2, 8, 1, 21);
  kss::Evaluator eval(sys);
  const Eigen::VectorXd t = vec({0.2, 0.5, -0.6});
  const Eigen::MatrixXd g = eval.gradient(t);
  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& x) { return kss::evaluate(sys, x)[0]; }, t, 1e-6);
  EXPECT_NEAR((g.row(0).transpose() - fd).norm(), 0.0, 1e-6 * (1.0 + fd.norm()));
}

TEST(Jet, ReferenceFixtures) {
  const KssSystem pure = KssSystem::from_terms(2, 3, {{{3, 0, 0}, 1.0}});
  const SpherePoint e0 = SpherePoint::basis_vector(2, 0);
  const kss::JetEvaluation j0 = kss::jet_on_sphere(pure, e0, kss::tangent_basis(e0));
  EXPECT_NEAR(j0.ybar_prime.norm(), 0.0, 1e-14);

  // t_0 * |t|^2 at e_1, derivative along e_0 is 1, normalized by sqrt(3).
  const KssSystem equator =
      KssSystem::from_terms(2, 3, {{{3, 0, 0}, 1.0}, {{1, 2, 0}, 1.0}, {{1, 0, 2}, 1.0}});
  const SpherePoint e1 = SpherePoint::basis_vector(2, 1);
  kss::TangentFrame frame{e1, {vec({1, 0, 0}), vec({0, 0, 1})}};
  const kss::JetEvaluation j1 = kss::jet_on_sphere(equator, e1, frame);
  EXPECT_NEAR(j1.ybar_prime(0, 0), 1.0 / std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(j1.ybar_prime(0, 1), 0.0, 1e-14);

  kss::TangentFrame wrong{e0, frame.basis};
  EXPECT_THROW(kss::jet_on_sphere(equator, e1, wrong), kss::DomainError);
}

TEST(Jet, UnitVarianceOfNormalizedDerivative) {
  std::mt19937_64 rng(6);
  const SpherePoint t = random_point(2, rng);
  const kss::TangentFrame frame = kss::tangent_basis(t);
  oracle::Accumulator a0, a1;
  for (int i = 0; i < 100000; ++i) {
    const KssSystem sys = kss::sample_kss(2, 6, 1, 9000000 + i);
    const kss::JetEvaluation j = kss::jet_on_sphere(sys, t, frame);
    a0.add(j.ybar_prime(0, 0) * j.ybar_prime(0, 0));
    a1.add(j.ybar_prime(0, 1) * j.ybar_prime(0, 1));
  }
  EXPECT_NEAR(a0.mean(), 1.0, 3.0 * a0.se());
  EXPECT_NEAR(a1.mean(), 1.0, 3.0 * a1.se());
}

TEST(Jet, NormIsFrameIndependent) {
  std::mt19937_64 rng(12);
  const KssSystem sys = kss::sample_kss(3, 9, 2, 44);
  const SpherePoint t = random_point(3, rng);
  const kss::TangentFrame f1 = kss::tangent_basis(t);
  // A second frame: rotate the first by an orthogonal mix of its vectors.
  Eigen::MatrixXd q = Eigen::MatrixXd::Random(3, 3);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  const Eigen::MatrixXd rot = qr.householderQ();
  kss::TangentFrame f2{t, {}};
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < 3; ++k) b += rot(k, i) * f1.basis[k];
    f2.basis.push_back(b);
  }
  const Eigen::MatrixXd g1 = kss::jet_on_sphere(sys, t, f1).ybar_prime;
  const Eigen::MatrixXd g2 = kss::jet_on_sphere(sys, t, f2).ybar_prime;
  const double v1 = std::sqrt((g1 * g1.transpose()).determinant());
  const double v2 = std::sqrt((g2 * g2.transpose()).determinant());
  EXPECT_NEAR(v1, v2, 1e-10 * (1.0 + v1));
}

TEST(Circle, RestrictionFixtureAndPeriod) {
  const KssSystem pure = KssSystem::from_terms(2, 5, {{{5, 0, 0}, 1.0}});
  kss::CircleRestriction f(pure, SpherePoint::basis_vector(2, 0), SpherePoint::basis_vector(2, 1));
  for (double phi : {0.0, 0.4, 1.9, 4.0}) {
    EXPECT_NEAR(f(phi)[0], std::pow(std::cos(phi), 5), 1e-14);
  }
  const KssSystem sys = kss::sample_kss(2, 11, 1, 3);
  kss::CircleRestriction g(sys, SpherePoint::basis_vector(2, 2), SpherePoint::basis_vector(2, 1));
  EXPECT_NEAR(g(0.77)[0], g(0.77 + 2 * kss::kPi)[0], 1e-12);
  const auto [v, slope] = g.value_and_slope(0.77);
  const double fd = (g(0.77 + 1e-6)[0] - g(0.77 - 1e-6)[0]) / 2e-6;
  EXPECT_NEAR(slope, fd, 1e-5 * (1 + std::abs(fd)));
  EXPECT_THROW(kss::CircleRestriction(sys, SpherePoint::basis_vector(2, 0),
                                      SpherePoint::normalized(vec({1, 1, 0}))),
               kss::DomainError);
}

TEST(Circle, RestrictedCovariance) {
  const int d = 4;
  std::vector<double> a, b;
  const SpherePoint u = SpherePoint::normalized(vec({1, 2, 2}));
  const SpherePoint v = SpherePoint::normalized(vec({2, 1, -2}));
  for (int i = 0; i < 100000; ++i) {
    const KssSystem sys = kss::sample_kss(2, d, 1, 7000000 + i);
    kss::CircleRestriction f(sys, u, v);
    a.push_back(f(0.3)[0]);
    b.push_back(f(1.1)[0]);
  }
  const auto cov = oracle::sample_covariance(a, b);
  EXPECT_NEAR(cov.value, std::pow(std::cos(0.8), d), 3.0 * cov.se);
}

TEST(Serialization, JsonRoundTrip) {
  const KssSystem sys = kss::sample_kss(2, 6, 2, 99);
  const std::string text = kss::to_json(sys);
  const auto parsed = nlohmann::json::parse(text);
  EXPECT_EQ(parsed["d"].get<int>(), 6);
  const KssSystem back = kss::kss_from_json(text);
  EXPECT_EQ(back.coeffs(), sys.coeffs());
  EXPECT_EQ(back.seed(), 99u);
}

}  // namespace
