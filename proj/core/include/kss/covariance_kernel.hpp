#pragma once

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "kss/sphere_geometry.hpp"

namespace kss {

/// Covariances of one equation's (Y, Ybar') at two points at angle theta,
/// expressed in the canonical frames of canonical_pair():
///   Cov(Y(s), Y(t))               = C = cos^d
///   Cov(Y(s), Ybar'_1(t))         = A = -sqrt(d) cos^{d-1} sin
///   Cov(Ybar'_1(s), Y(t))         = -A
///   Cov(Ybar'_1(s), Ybar'_1(t))   = B = cos^d - (d-1) cos^{d-2} sin^2
///   Cov(Ybar'_k(s), Ybar'_k(t))   = D = cos^{d-1}   (k >= 2)
/// sigma2 and rho describe the first derivative coordinates conditioned on
/// Y(s) = Y(t) = 0: conditional variance and conditional correlation.
struct CovarianceProfile {
  double theta = 0.0;
  int d = 0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  double one_minus_C2 = 0.0;  // 1 - C^2, computed without cancellation
  double sigma2 = 0.0;
  double rho = 0.0;
  double rho_pp = 0.0;  // equals D
  double psi = 0.0;     // |C| + |A|
  bool degenerate = false;  // theta at 0 or pi: the two points coincide up to sign
};

/// cos^n(theta) via exp(n log cos) with the reflection cos^n(pi - x) = (-1)^n cos^n(x).
double cos_power(double theta, int n);

CovarianceProfile profile(double theta, int d, int m);

/// Correlation rho of the conditioned first derivatives, from the profile scalars.
double conditional_correlation(double A, double B, double C, double one_minus_C2);

/// (2+2m) x (2+2m) covariance of (Y(s), Y(t), Ybar'(s), Ybar'(t)). Throws
/// ConsistencyError if the minimum eigenvalue falls below -1e-9.
Eigen::MatrixXd joint_matrix(double theta, int d, int m);

/// Points at angle theta with the frames that realize the sign conventions above.
struct CanonicalPair {
  SpherePoint s;
  TangentFrame frame_s;
  SpherePoint t;
  TangentFrame frame_t;
};
CanonicalPair canonical_pair(double theta, int m);

/// Scaling limits at theta = z / sqrt(d), d -> infinity.
struct LimitProfile {
  double z = 0.0;
  double C = 0.0;    // exp(-z^2/2), also the limit of D
  double C2 = 0.0;   // exp(-z^2)
  double A = 0.0;    // -z exp(-z^2/2)
  double B = 0.0;    // (1 - z^2) exp(-z^2/2)
  double CD = 0.0;   // exp(-z^2)
  double one_minus_C2 = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;
  bool degenerate = false;  // z == 0
};

LimitProfile limit_profile(double z);

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Evaluates the six decay bounds at theta = z / sqrt(d) for the given alpha
/// and constant. Requires z / sqrt(d) < pi/2.
std::vector<BoundCheck> verify_bounds(double z, int d, double alpha = 0.15, double constant = 2.0);

/// |C| + |A|.
double arcones_psi(double theta, int d);

/// Maximum absolute row/column sum of the cross-covariance block between the
/// standardized vectors at s and at t: max(|C|+|A|, |A|+|B|, |D|).
double arcones_psi_full(double theta, int d);

/// CSV rows theta,d,A,B,C,D,sigma2,rho,psi over an angle grid.
void write_profile_csv(std::ostream& out, int d, int m, const std::vector<double>& thetas);

}  // namespace kss
