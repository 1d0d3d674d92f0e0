#pragma once

#include <Eigen/Core>
#include <functional>

#include "kss/numeric.hpp"
#include "kss/zero_set_volume.hpp"

namespace kss {

/// X(u) = sqrt(2/n) sum_k cos(w_k . u + phi_k) with w_k ~ N(0, I_m) and
/// phi_k ~ U[0, 2 pi): approximately Gaussian with covariance exp(-|u-v|^2/2).
class RandomWaveField {
 public:
  RandomWaveField(Eigen::MatrixXd frequencies, Eigen::VectorXd phases);

  int dim() const noexcept { return static_cast<int>(freq_.cols()); }
  int n_waves() const noexcept { return static_cast<int>(freq_.rows()); }
  double amplitude() const noexcept { return amplitude_; }
  const Eigen::MatrixXd& frequencies() const noexcept { return freq_; }
  const Eigen::VectorXd& phases() const noexcept { return phase_; }

  double value(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& u) const;

  /// Values on the tensor grid x_i, y_j (m = 2): out(i, j) = X(x_i, y_j).
  Eigen::MatrixXd grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const;

  /// The field u -> X(R^T u) for a rotation R of the plane by `angle` (m = 2).
  RandomWaveField rotated(double angle) const;

 private:
  Eigen::MatrixXd freq_;
  Eigen::VectorXd phase_;
  double amplitude_;
};

RandomWaveField sample_field(int m, int n_waves, Rng& rng);

/// Exact covariance of the limit field.
double limit_covariance(const Eigen::Ref<const Eigen::VectorXd>& u,
                        const Eigen::Ref<const Eigen::VectorXd>& v);

/// Hessian of exp(-|u|^2/2): (u_i u_j - delta_ij) exp(-|u|^2/2).
Eigen::MatrixXd limit_covariance_hessian(const Eigen::Ref<const Eigen::VectorXd>& u);

struct BoxSpec {
  double cx = 0.0;
  double cy = 0.0;
  double side = 1.0;
};

/// Marching-squares length of {X = 0} inside the box on an (n+1) x (n+1) grid.
/// error_estimate is the difference to the same trace on every other grid point.
VolumeEstimate nodal_length_box(const RandomWaveField& field, int n, const BoxSpec& box = {});

/// Same for an arbitrary function of (x, y).
VolumeEstimate nodal_length_box(const std::function<double(double, double)>& field, int n,
                                const BoxSpec& box = {});

/// Marching-squares length on a grid of values with spacing h.
double marching_squares_length(const Eigen::MatrixXd& values, double h);

/// int_{|u| < delta} |Hess(u) - Hess(0)|_F / |u|^m du by polar quadrature.
double ef_integrability_check(double delta, int m);

}  // namespace kss
