#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "kss/numeric.hpp"

namespace kss {

/// Unit vector in R^{m+1}. Construction checks the norm to 1e-12.
class SpherePoint {
 public:
  explicit SpherePoint(Eigen::VectorXd coords);

  /// Normalizes an arbitrary nonzero vector.
  static SpherePoint normalized(const Eigen::VectorXd& v);
  static SpherePoint basis_vector(int dim, int k);

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  double operator[](int i) const { return coords_[i]; }

 private:
  Eigen::VectorXd coords_;
};

/// Angles (theta_1..theta_m); the first m-1 lie in [0,pi], the last in [0,2pi).
struct HyperAngles {
  std::vector<double> theta;
};

/// Orthonormal basis of the tangent space at `base`.
struct TangentFrame {
  SpherePoint base;
  std::vector<Eigen::VectorXd> basis;
};

SpherePoint hypersph_to_cart(const HyperAngles& angles, int m);

/// Geodesic distance in [0, pi]. Inner products within 1e-9 outside [-1,1]
/// are clamped; further out is a DomainError.
double geodesic_dist(const SpherePoint& s, const SpherePoint& t);

/// kappa_m kappa_{m-1} int_0^pi sin^{m-1}(theta) h(cos theta) dtheta, i.e. the
/// double integral of h(<s,t>) over S^m x S^m. The range is split at pi/2.
QuadResult pair_integral_reduce(const std::function<double(double)>& h, int m,
                                const QuadratureSpec& spec = {});

/// Deterministic Householder completion of t to an orthonormal basis.
TangentFrame tangent_basis(const SpherePoint& t);

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

struct SphericalMesh {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<int> antipode;  // index of -v for each vertex
  double max_edge = 0.0;      // geodesic
  double min_edge = 0.0;

  std::size_t edge_count() const { return triangles.size() * 3 / 2; }
};

inline constexpr int kMaxMeshLevel = 8;

/// Subdivided icosahedron projected to S^2 (20 * 4^level triangles).
SphericalMesh icosphere(int level);

/// Largest geodesic edge length of icosphere(level), without building it
/// beyond what is needed (cached per level).
double icosphere_max_edge(int level);

/// The same mesh with every vertex mapped through the orthogonal matrix q.
SphericalMesh rotated(const SphericalMesh& mesh, const Eigen::Matrix3d& q);

void write_off(const SphericalMesh& mesh, std::ostream& out);

/// Cap chart around e_0: u in the open unit ball of R^m maps to (sqrt(1-|u|^2), u).
SpherePoint cap_chart(const Eigen::VectorXd& u);
double cap_jacobian(const Eigen::VectorXd& u);
/// Inverse of cap_chart on the hemisphere x_0 > 0.
Eigen::VectorXd cap_project(const SpherePoint& p);

}  // namespace kss
