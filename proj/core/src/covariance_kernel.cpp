#include "kss/covariance_kernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "kss/error.hpp"

namespace kss {

double cos_power(double theta, int n) {
  if (n == 0) return 1.0;
  if (theta > 0.5 * kPi) {
    const double v = cos_power(kPi - theta, n);
    return (n % 2 == 0) ? v : -v;
  }
  const double c = std::cos(theta);
  if (c <= 0.0) return 0.0;
  return std::exp(n * std::log(c));
}

namespace {

double one_minus_cos_power_sq(double theta, int d) {
  const double folded = std::min(theta, kPi - theta);
  const double c = std::cos(folded);
  if (c <= 0.0) return 1.0;
  return -std::expm1(2.0 * d * std::log(c));
}

}  // namespace

double conditional_correlation(double A, double B, double C, double one_minus_C2) {
  const double den = one_minus_C2 - A * A;
  if (!(den > 0.0)) return -1.0;
  const double num = B * one_minus_C2 - A * A * C;
  return std::clamp(num / den, -1.0, 1.0);
}

CovarianceProfile profile(double theta, int d, int m) {
  if (d < 2) throw DomainError("profile: degree must exceed 1");
  if (m < 1) throw DomainError("profile: m must be at least 1");
  if (!(theta >= 0.0 && theta <= kPi)) throw DomainError("profile: theta outside [0, pi]");

  CovarianceProfile p;
  p.theta = theta;
  p.d = d;
  const double s = std::sin(theta);
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  p.C = cos_power(theta, d);
  p.D = cos_power(theta, d - 1);
  p.A = -sqrt_d * p.D * s;
  p.B = p.C - (d - 1) * cos_power(theta, d - 2) * s * s;
  p.rho_pp = p.D;
  p.psi = std::abs(p.C) + std::abs(p.A);
  p.one_minus_C2 = one_minus_cos_power_sq(theta, d);

  if (!(p.one_minus_C2 > 0.0)) {
    p.degenerate = true;
    p.sigma2 = 0.0;
    p.rho = -1.0;
    return p;
  }
  p.sigma2 = std::clamp((p.one_minus_C2 - p.A * p.A) / p.one_minus_C2, 0.0, 1.0);
  p.rho = conditional_correlation(p.A, p.B, p.C, p.one_minus_C2);
  return p;
}

Eigen::MatrixXd joint_matrix(double theta, int d, int m) {
  const CovarianceProfile p = profile(theta, d, m);
  const int n = 2 + 2 * m;
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(n, n);
  const int ys = 0;
  const int yt = 1;
  const int ds = 2;      // Ybar'(s) block start
  const int dt = 2 + m;  // Ybar'(t) block start
  k(ys, yt) = k(yt, ys) = p.C;
  k(ys, dt) = k(dt, ys) = p.A;
  k(yt, ds) = k(ds, yt) = -p.A;
  k(ds, dt) = k(dt, ds) = p.B;
  for (int j = 1; j < m; ++j) k(ds + j, dt + j) = k(dt + j, ds + j) = p.D;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < -1e-9) {
    throw ConsistencyError("joint covariance not PSD at theta=" + std::to_string(theta) +
                           ", d=" + std::to_string(d) + " (min eigenvalue " +
                           std::to_string(min_eig) + ")");
  }
  return k;
}

CanonicalPair canonical_pair(double theta, int m) {
  const int n = m + 1;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  s[0] = 1.0;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  t[0] = std::cos(theta);
  t[1] = std::sin(theta);
  std::vector<Eigen::VectorXd> fs;
  std::vector<Eigen::VectorXd> ft;
  for (int k = 1; k <= m; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[k] = 1.0;
    fs.push_back(e);
    if (k == 1) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
      b[0] = -std::sin(theta);
      b[1] = std::cos(theta);
      ft.push_back(b);
    } else {
      ft.push_back(e);
    }
  }
  SpherePoint sp(s);
  SpherePoint tp = SpherePoint::normalized(t);
  return {sp, {sp, std::move(fs)}, tp, {tp, std::move(ft)}};
}

LimitProfile limit_profile(double z) {
  if (!(z >= 0.0)) throw DomainError("limit_profile: z must be nonnegative");
  LimitProfile p;
  p.z = z;
  const double z2 = z * z;
  p.C = std::exp(-0.5 * z2);
  p.C2 = std::exp(-z2);
  p.A = -z * p.C;
  p.B = (1.0 - z2) * p.C;
  p.CD = p.C2;
  p.one_minus_C2 = -std::expm1(-z2);
  if (!(p.one_minus_C2 > 0.0)) {
    p.degenerate = true;
    p.sigma2 = 0.0;
    p.rho = -1.0;
    return p;
  }
  p.sigma2 = std::clamp((p.one_minus_C2 - z2 * p.C2) / p.one_minus_C2, 0.0, 1.0);
  p.rho = conditional_correlation(p.A, p.B, p.C, p.one_minus_C2);
  return p;
}

std::vector<BoundCheck> verify_bounds(double z, int d, double alpha, double constant) {
  const double theta = z / std::sqrt(static_cast<double>(d));
  if (!(theta < 0.5 * kPi)) throw DomainError("verify_bounds: need z/sqrt(d) < pi/2");
  const CovarianceProfile p = profile(theta, d, 2);
  const double z2 = z * z;
  const double e1 = std::exp(-alpha * z2);
  const double e2 = std::exp(-2.0 * alpha * z2);
  // Relative slack for rounding at equality (z = 0).
  const auto le = [](double a, double b) { return a <= b * (1.0 + 1e-12) + 1e-300; };
  std::vector<BoundCheck> out;
  out.push_back({"|A| <= z exp(-a z^2)", std::abs(p.A), z * e1, false});
  out.push_back({"|B| <= (1+z^2) exp(-a z^2)", std::abs(p.B), (1.0 + z2) * e1, false});
  out.push_back({"|C| <= exp(-a z^2)", std::abs(p.C), e1, false});
  out.push_back({"|D| <= exp(-a z^2)", std::abs(p.D), e1, false});
  out.push_back({"1 - sigma^2 <= K exp(-2a z^2)", 1.0 - p.sigma2, constant * e2, false});
  out.push_back({"|rho| <= K (1+z^2)^2 exp(-2a z^2)", std::abs(p.rho),
                 constant * (1.0 + z2) * (1.0 + z2) * e2, false});
  for (auto& b : out) b.holds = le(b.lhs, b.rhs);
  // 1 - sigma^2 is also bounded below by zero.
  out[4].holds = out[4].holds && p.sigma2 <= 1.0;
  return out;
}

double arcones_psi(double theta, int d) {
  const CovarianceProfile p = profile(theta, d, 1);
  return p.psi;
}

double arcones_psi_full(double theta, int d) {
  const CovarianceProfile p = profile(theta, d, 1);
  return std::max({std::abs(p.C) + std::abs(p.A), std::abs(p.A) + std::abs(p.B), std::abs(p.D)});
}

void write_profile_csv(std::ostream& out, int d, int m, const std::vector<double>& thetas) {
  out << "theta,d,A,B,C,D,sigma2,rho,psi\n" << std::setprecision(17);
  for (double theta : thetas) {
    const CovarianceProfile p = profile(theta, d, m);
    out << p.theta << ',' << p.d << ',' << p.A << ',' << p.B << ',' << p.C << ',' << p.D << ','
        << p.sigma2 << ',' << p.rho << ',' << p.psi << '\n';
  }
}

}  // namespace kss
