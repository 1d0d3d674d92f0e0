#include "kss/sphere_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <tuple>

#include "kss/error.hpp"

namespace kss {

SpherePoint::SpherePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw DomainError("SpherePoint needs at least two coordinates");
  if (!coords_.allFinite()) throw DomainError("SpherePoint has non-finite coordinates");
  if (std::abs(coords_.norm() - 1.0) > 1e-12) {
    throw DomainError("SpherePoint is not unit norm (|x| = " + std::to_string(coords_.norm()) +
                      ")");
  }
}

SpherePoint SpherePoint::normalized(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero vector");
  return SpherePoint(v / n);
}

SpherePoint SpherePoint::basis_vector(int dim, int k) {
  if (k < 0 || k > dim) throw DomainError("basis index out of range");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim + 1);
  e[k] = 1.0;
  return SpherePoint(std::move(e));
}

SpherePoint hypersph_to_cart(const HyperAngles& angles, int m) {
  if (m < 1) throw DomainError("hypersph_to_cart: m must be at least 1");
  if (static_cast<int>(angles.theta.size()) != m) {
    throw DomainError("hypersph_to_cart: expected " + std::to_string(m) + " angles, got " +
                      std::to_string(angles.theta.size()));
  }
  constexpr double slack = 1e-12;
  for (int j = 0; j < m; ++j) {
    const double upper = (j == m - 1) ? 2.0 * kPi : kPi;
    const double a = angles.theta[j];
    if (!(a >= -slack && a <= upper + slack)) {
      throw DomainError("hypersph_to_cart: angle " + std::to_string(j + 1) + " out of range");
    }
  }
  Eigen::VectorXd x(m + 1);
  double sin_prod = 1.0;
  for (int k = 0; k < m; ++k) {
    x[k] = sin_prod * std::cos(angles.theta[k]);
    sin_prod *= std::sin(angles.theta[k]);
  }
  x[m] = sin_prod;
  return SpherePoint::normalized(x);
}

double geodesic_dist(const SpherePoint& s, const SpherePoint& t) {
  if (s.dim() != t.dim()) throw DomainError("geodesic_dist: dimension mismatch");
  double c = s.coords().dot(t.coords());
  if (c > 1.0 + 1e-9 || c < -1.0 - 1e-9) {
    throw DomainError("geodesic_dist: inner product outside [-1,1]");
  }
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

QuadResult pair_integral_reduce(const std::function<double(double)>& h, int m,
                                const QuadratureSpec& spec) {
  if (m < 1) throw DomainError("pair_integral_reduce: m must be at least 1");
  const auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    return std::pow(s, m - 1) * h(std::cos(theta));
  };
  const QuadResult left = integrate_adaptive(integrand, 0.0, 0.5 * kPi, spec);
  const QuadResult right = integrate_adaptive(integrand, 0.5 * kPi, kPi, spec);
  const double scale = sphere_volume(m) * sphere_volume(m - 1);
  return {scale * (left.value + right.value), scale * (left.error + right.error),
          left.evaluations + right.evaluations};
}

TangentFrame tangent_basis(const SpherePoint& t) {
  const int n = t.dim() + 1;
  // H = I - 2 v v^T / |v|^2 with v = e0 + sign(t0) t maps e0 to -sign(t0) t;
  // its remaining columns are an orthonormal basis of t^perp.
  const double sign = t[0] >= 0.0 ? 1.0 : -1.0;
  Eigen::VectorXd v = sign * t.coords();
  v[0] += 1.0;
  const double vv = v.squaredNorm();
  std::vector<Eigen::VectorXd> basis;
  basis.reserve(n - 1);
  for (int k = 1; k < n; ++k) {
    Eigen::VectorXd col = -2.0 * v[k] / vv * v;
    col[k] += 1.0;
    basis.push_back(std::move(col));
  }
  return {t, std::move(basis)};
}

namespace {

double arc(const Vec3& a, const Vec3& b) {
  return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
}

void finish_mesh(SphericalMesh& mesh) {
  mesh.max_edge = 0.0;
  mesh.min_edge = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const double len = arc(mesh.vertices[tri[e]], mesh.vertices[tri[(e + 1) % 3]]);
      mesh.max_edge = std::max(mesh.max_edge, len);
      mesh.min_edge = std::min(mesh.min_edge, len);
    }
  }
  using Key = std::tuple<long long, long long, long long>;
  const auto key = [](const Vec3& p) {
    constexpr double scale = 1e9;
    return Key{std::llround(p.x() * scale), std::llround(p.y() * scale),
               std::llround(p.z() * scale)};
  };
  std::map<Key, int> index;
  for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
    index.emplace(key(mesh.vertices[i]), i);
  }
  mesh.antipode.assign(mesh.vertices.size(), -1);
  for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
    auto it = index.find(key(-mesh.vertices[i]));
    if (it != index.end()) mesh.antipode[i] = it->second;
  }
}

}  // namespace

SphericalMesh icosphere(int level) {
  if (level < 0 || level > kMaxMeshLevel) {
    throw DomainError("icosphere: level " + std::to_string(level) + " outside [0, " +
                      std::to_string(kMaxMeshLevel) + "] (memory guard)");
  }
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  SphericalMesh mesh;
  mesh.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                   {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                   {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : mesh.vertices) v.normalize();
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
      const auto k = std::minmax(a, b);
      auto [it, inserted] = midpoint.try_emplace({k.first, k.second}, 0);
      if (inserted) {
        it->second = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      }
      return it->second;
    };
    std::vector<Triangle> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const int ab = mid(t[0], t[1]);
      const int bc = mid(t[1], t[2]);
      const int ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }
  mesh.level = level;
  finish_mesh(mesh);
  return mesh;
}

double icosphere_max_edge(int level) {
  static std::mutex mutex;
  static std::map<int, double> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(level);
  if (it != cache.end()) return it->second;
  const double e = icosphere(level).max_edge;
  cache.emplace(level, e);
  return e;
}

SphericalMesh rotated(const SphericalMesh& mesh, const Eigen::Matrix3d& q) {
  if ((q.transpose() * q - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
    throw DomainError("rotated: matrix is not orthogonal");
  }
  SphericalMesh out = mesh;
  for (auto& v : out.vertices) v = (q * v).normalized();
  return out;
}

void write_off(const SphericalMesh& mesh, std::ostream& out) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' '
      << mesh.edge_count() << '\n';
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

SpherePoint cap_chart(const Eigen::VectorXd& u) {
  const double r2 = u.squaredNorm();
  if (!(r2 < 1.0)) throw DomainError("cap_chart: |u| must be < 1");
  Eigen::VectorXd x(u.size() + 1);
  x[0] = std::sqrt(1.0 - r2);
  x.tail(u.size()) = u;
  return SpherePoint::normalized(x);
}

double cap_jacobian(const Eigen::VectorXd& u) {
  const double r2 = u.squaredNorm();
  if (!(r2 < 1.0)) throw DomainError("cap_jacobian: |u| must be < 1");
  return 1.0 / std::sqrt(1.0 - r2);
}

Eigen::VectorXd cap_project(const SpherePoint& p) {
  if (!(p[0] > 0.0)) throw DomainError("cap_project: point not in the open upper hemisphere");
  return p.coords().tail(p.dim());
}

}  // namespace kss
