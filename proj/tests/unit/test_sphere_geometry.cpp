#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "kss/error.hpp"
#include "kss/sphere_geometry.hpp"
#include "oracles.hpp"

namespace {

using kss::SpherePoint;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(HyperAngles, ReferencePoints) {
  const double pi = kss::kPi;
  EXPECT_NEAR((kss::hypersph_to_cart({{0.0, 1.3}}, 2).coords() - vec({1, 0, 0})).norm(), 0.0, 1e-15);
  EXPECT_NEAR((kss::hypersph_to_cart({{pi / 2, 0.0}}, 2).coords() - vec({0, 1, 0})).norm(), 0.0,
              1e-15);
  EXPECT_NEAR((kss::hypersph_to_cart({{pi / 2, pi / 2}}, 2).coords() - vec({0, 0, 1})).norm(), 0.0,
              1e-15);
}

TEST(HyperAngles, UnitNormForRandomAngles) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int m = 1; m <= 4; ++m) {
    for (int rep = 0; rep < 200; ++rep) {
      kss::HyperAngles a;
      for (int k = 0; k < m - 1; ++k) a.theta.push_back(kss::kPi * u(rng));
      a.theta.push_back(2.0 * kss::kPi * u(rng) * 0.999999);
      EXPECT_NEAR(kss::hypersph_to_cart(a, m).coords().norm(), 1.0, 1e-12);
    }
  }
}

TEST(HyperAngles, DimensionMismatchThrows) {
  EXPECT_THROW(kss::hypersph_to_cart({{0.1, 0.2, 0.3}}, 2), kss::DomainError);
}

TEST(Geodesic, ReferenceDistances) {
  const SpherePoint e0 = SpherePoint::basis_vector(2, 0);
  const SpherePoint e1 = SpherePoint::basis_vector(2, 1);
  const SpherePoint minus_e0(vec({-1, 0, 0}));
  EXPECT_DOUBLE_EQ(kss::geodesic_dist(e0, e0), 0.0);
  EXPECT_NEAR(kss::geodesic_dist(e0, minus_e0), kss::kPi, 1e-15);
  EXPECT_NEAR(kss::geodesic_dist(e0, e1), kss::kPi / 2, 1e-15);
}

TEST(Geodesic, TriangleInequalityAndSymmetry) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto random_point = [&] { return SpherePoint::normalized(vec({n(rng), n(rng), n(rng), n(rng)})); };
  for (int rep = 0; rep < 500; ++rep) {
    const SpherePoint a = random_point(), b = random_point(), c = random_point();
    EXPECT_LE(kss::geodesic_dist(a, c), kss::geodesic_dist(a, b) + kss::geodesic_dist(b, c) + 1e-9);
    EXPECT_DOUBLE_EQ(kss::geodesic_dist(a, b), kss::geodesic_dist(b, a));
  }
}

TEST(PairIntegral, ConstantGivesSquaredArea) {
  for (int m : {1, 2, 3}) {
    const double kappa = oracle::sphere_area(m);
    const kss::QuadResult r = kss::pair_integral_reduce([](double) { return 1.0; }, m);
    EXPECT_NEAR(r.value, kappa * kappa, 1e-8 * kappa * kappa) << "m=" << m;
  }
  EXPECT_NEAR(kss::pair_integral_reduce([](double) { return 1.0; }, 2).value, 16 * kss::kPi * kss::kPi,
              1e-8);
}

TEST(PairIntegral, OddFunctionVanishes) {
  EXPECT_NEAR(kss::pair_integral_reduce([](double x) { return x; }, 2).value, 0.0, 1e-9);
}

TEST(PairIntegral, MatchesMonteCarloOverPairs) {
  // E[h(<s,t>)] for independent uniform s, t on S^2 times kappa_2^2.
  const auto h = [](double x) { return std::exp(3.0 * x); };
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  oracle::Accumulator acc;
  for (int i = 0; i < 200000; ++i) {
    Eigen::Vector3d s(n(rng), n(rng), n(rng));
    Eigen::Vector3d t(n(rng), n(rng), n(rng));
    acc.add(h(s.normalized().dot(t.normalized())));
  }
  const double k2 = oracle::sphere_area(2);
  const double value = kss::pair_integral_reduce(h, 2).value;
  EXPECT_NEAR(value, k2 * k2 * acc.mean(), 3.5 * k2 * k2 * acc.se());
  // Closed form: kappa_2 * 2 pi * int_{-1}^{1} e^{3x} dx.
  EXPECT_NEAR(value, k2 * 2 * kss::kPi * (std::exp(3.0) - std::exp(-3.0)) / 3.0, 1e-8 * value);
}

TEST(TangentBasis, OrthonormalAndTangent) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int m = 1; m <= 4; ++m) {
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd v(m + 1);
      for (int k = 0; k <= m; ++k) v[k] = n(rng);
      const SpherePoint t = SpherePoint::normalized(v);
      const kss::TangentFrame f = kss::tangent_basis(t);
      ASSERT_EQ(static_cast<int>(f.basis.size()), m);
      for (int i = 0; i < m; ++i) {
        EXPECT_NEAR(f.basis[i].dot(t.coords()), 0.0, 1e-10);
        for (int j = 0; j < m; ++j) EXPECT_NEAR(f.basis[i].dot(f.basis[j]), i == j ? 1.0 : 0.0, 1e-10);
      }
      const kss::TangentFrame again = kss::tangent_basis(t);
      for (int i = 0; i < m; ++i) EXPECT_EQ(f.basis[i], again.basis[i]);
    }
  }
}

TEST(TangentBasis, NorthPoleSpansRemainingAxes) {
  const kss::TangentFrame f = kss::tangent_basis(SpherePoint::basis_vector(2, 0));
  for (const auto& b : f.basis) EXPECT_NEAR(b[0], 0.0, 1e-15);
}

TEST(Icosphere, CountsAndTopology) {
  EXPECT_EQ(kss::icosphere(0).triangles.size(), 20u);
  EXPECT_EQ(kss::icosphere(0).vertices.size(), 12u);
  EXPECT_EQ(kss::icosphere(2).triangles.size(), 320u);
  for (int level = 0; level <= 4; ++level) {
    const kss::SphericalMesh mesh = kss::icosphere(level);
    std::map<std::pair<int, int>, int> edges;
    for (const auto& tri : mesh.triangles) {
      for (int e = 0; e < 3; ++e) {
        const int a = tri[e], b = tri[(e + 1) % 3];
        edges[{std::min(a, b), std::max(a, b)}]++;
      }
    }
    for (const auto& [edge, count] : edges) EXPECT_EQ(count, 2);
    const long v = mesh.vertices.size(), e = edges.size(), f = mesh.triangles.size();
    EXPECT_EQ(v - e + f, 2);
    EXPECT_EQ(f, 20L << (2 * level));
    for (const auto& p : mesh.vertices) EXPECT_NEAR(p.norm(), 1.0, 1e-12);
    EXPECT_LE(mesh.max_edge, 2.0 * mesh.min_edge);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      EXPECT_NEAR((mesh.vertices[mesh.antipode[i]] + mesh.vertices[i]).norm(), 0.0, 1e-12);
    }
  }
}

TEST(Icosphere, LevelGuard) { EXPECT_THROW(kss::icosphere(9), kss::DomainError); }

TEST(Icosphere, OffExport) {
  std::ostringstream os;
  kss::write_off(kss::icosphere(1), os);
  std::istringstream in(os.str());
  std::string header;
  int nv, nf, ne;
  in >> header >> nv >> nf >> ne;
  EXPECT_EQ(header, "OFF");
  EXPECT_EQ(nv, 42);
  EXPECT_EQ(nf, 80);
}

TEST(CapChart, ReferenceValuesAndRoundTrip) {
  const SpherePoint p0 = kss::cap_chart(Eigen::VectorXd::Zero(2));
  EXPECT_NEAR((p0.coords() - vec({1, 0, 0})).norm(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(kss::cap_jacobian(Eigen::VectorXd::Zero(2)), 1.0);
  const Eigen::VectorXd u = vec({0.6, 0.0});
  EXPECT_NEAR((kss::cap_chart(u).coords() - vec({0.8, 0.6, 0.0})).norm(), 0.0, 1e-15);
  EXPECT_NEAR(kss::cap_jacobian(u), 1.25, 1e-14);
  const Eigen::VectorXd w = vec({0.3, -0.45});
  EXPECT_NEAR((kss::cap_project(kss::cap_chart(w)) - w).norm(), 0.0, 1e-12);
  EXPECT_THROW(kss::cap_chart(vec({1.0, 0.0})), kss::DomainError);
}

}  // namespace
