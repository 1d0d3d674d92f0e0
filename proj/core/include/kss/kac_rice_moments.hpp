#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "kss/covariance_kernel.hpp"
#include "kss/numeric.hpp"

namespace kss {

/// E[sqrt(det(G G^T))] for an r x m standard Gaussian matrix.
double expected_sqrt_det(int m, int r);

/// Expected (m-r)-volume of the zero set of an r x (m+1) system of degree d.
double expected_volume(int m, int r, int d);

/// Conditional law of the normalized derivatives at two points given that the
/// field vanishes at both: per equation the first coordinates have variance
/// sigma2 and correlation rho, the others variance 1 and correlation D.
struct ConditionalLaw {
  double sigma2 = 1.0;
  double rho = 0.0;
  double D = 0.0;
};

ConditionalLaw conditional_law(const CovarianceProfile& p);
ConditionalLaw conditional_law(const LimitProfile& p);

/// E[f(zeta_1) f(zeta_2)] for r = 1, where f is the Euclidean norm, computed
/// without sampling through the Laplace representation of the norm.
double conditional_factor_exact(const ConditionalLaw& law, int m);

/// E|zeta| for zeta = (sigma X_1, X_2, ..., X_m), X standard normal.
double expected_scaled_norm(double sigma2, int m);

/// Frozen standard normal draws reused across angles (common random numbers).
class GaussianBlock {
 public:
  GaussianBlock(int r, int m, int n_samples, std::uint64_t seed);

  int r() const noexcept { return r_; }
  int m() const noexcept { return m_; }
  int samples() const noexcept { return n_; }
  /// Row i holds the 2 r m draws of sample i.
  const Eigen::MatrixXd& draws() const noexcept { return z_; }

 private:
  int r_;
  int m_;
  int n_;
  Eigen::MatrixXd z_;
};

struct FactorEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::vector<double> batch_means;
};

/// Monte Carlo E[f(zeta_1) f(zeta_2) | Y(s) = Y(t) = u] over the frozen block.
/// The conditional means of the first derivative coordinates are
/// -A u / (1 + C) at s and +A u / (1 + C) at t. u has r entries (empty means 0).
FactorEstimate conditional_factor_mc(const CovarianceProfile& p, const GaussianBlock& block,
                                     const std::vector<double>& u = {}, int batches = 20);
FactorEstimate conditional_factor_mc(const ConditionalLaw& law, const GaussianBlock& block,
                                     int batches = 20);

/// Convenience: fresh block of n_mc samples, u = 0.
FactorEstimate conditional_factor(double theta, int d, int m, int r, int n_mc, std::uint64_t seed);

/// Joint density of (Y_l(s), Y_l(t)) at (u, u), multiplied over the r equations.
double pair_density(const CovarianceProfile& p, const std::vector<double>& u, int r);

enum class InnerMethod { automatic, exact, monte_carlo };

struct SecondMomentOptions {
  InnerMethod inner = InnerMethod::automatic;  // exact for r = 1
  int n_mc = 200'000;
  std::uint64_t seed = 0x4b6163526963ULL;
  int batches = 20;
  double z_max = 12.0;
  double diagonal_panel = 2.0;
  double rel_tol = 1e-6;  // Richardson tolerance on the diagonal panel
};

struct MomentResult {
  double expected = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
  double inner_mc_se = 0.0;
  double quadrature_error = 0.0;
};

/// Kac-Rice second moment and variance of the zero-set volume at degree d.
MomentResult second_moment(int m, int r, int d, const SecondMomentOptions& options = {});

/// d -> infinity limit of Var(V) / d^{r - m/2}.
MomentResult limit_variance(int m, int r, const SecondMomentOptions& options = {});

struct BoxVariance {
  double mean = 0.0;
  double variance = 0.0;
  double quadrature_error = 0.0;
};

/// Mean and variance of the nodal length of the limit field (covariance
/// exp(-|u-v|^2/2)) inside the unit square. m = 2, r = 1 only.
BoxVariance limit_variance_box(int m, int r);

}  // namespace kss
