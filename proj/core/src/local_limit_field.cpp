#include "kss/local_limit_field.hpp"

#include <cmath>

#include "kss/error.hpp"
#include "kss/sphere_geometry.hpp"

namespace kss {

RandomWaveField::RandomWaveField(Eigen::MatrixXd frequencies, Eigen::VectorXd phases)
    : freq_(std::move(frequencies)), phase_(std::move(phases)) {
  if (freq_.rows() != phase_.size() || freq_.rows() < 1) {
    throw DomainError("RandomWaveField: frequency and phase counts differ");
  }
  amplitude_ = std::sqrt(2.0 / static_cast<double>(freq_.rows()));
}

double RandomWaveField::value(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != dim()) throw DomainError("RandomWaveField: point has wrong dimension");
  const Eigen::VectorXd arg = freq_ * u + phase_;
  return amplitude_ * arg.array().cos().sum();
}

Eigen::VectorXd RandomWaveField::gradient(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != dim()) throw DomainError("RandomWaveField: point has wrong dimension");
  const Eigen::VectorXd arg = freq_ * u + phase_;
  return -amplitude_ * (freq_.transpose() * arg.array().sin().matrix());
}

Eigen::MatrixXd RandomWaveField::grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const {
  if (dim() != 2) throw DomainError("RandomWaveField::grid needs m = 2");
  // cos(a x + b y + phi) = cos(a x + phi) cos(b y) - sin(a x + phi) sin(b y)
  const Eigen::Index n = freq_.rows();
  Eigen::MatrixXd cx(xs.size(), n);
  Eigen::MatrixXd sx(xs.size(), n);
  Eigen::MatrixXd cy(ys.size(), n);
  Eigen::MatrixXd sy(ys.size(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      const double a = freq_(k, 0) * xs[i] + phase_[k];
      cx(i, k) = std::cos(a);
      sx(i, k) = std::sin(a);
    }
    for (Eigen::Index j = 0; j < ys.size(); ++j) {
      const double b = freq_(k, 1) * ys[j];
      cy(j, k) = std::cos(b);
      sy(j, k) = std::sin(b);
    }
  }
  return amplitude_ * (cx * cy.transpose() - sx * sy.transpose());
}

RandomWaveField RandomWaveField::rotated(double angle) const {
  if (dim() != 2) throw DomainError("RandomWaveField::rotated needs m = 2");
  // X(R^T u) has frequencies R w.
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Eigen::MatrixXd f = freq_ * rot.transpose();
  return RandomWaveField(std::move(f), phase_);
}

RandomWaveField sample_field(int m, int n_waves, Rng& rng) {
  if (m < 1) throw DomainError("sample_field: m must be positive");
  if (n_waves < 64) throw DomainError("sample_field: need at least 64 waves");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * kPi);
  Eigen::MatrixXd f(n_waves, m);
  Eigen::VectorXd p(n_waves);
  for (int k = 0; k < n_waves; ++k) {
    for (int j = 0; j < m; ++j) f(k, j) = normal(rng);
    p[k] = uniform(rng);
  }
  return RandomWaveField(std::move(f), std::move(p));
}

double limit_covariance(const Eigen::Ref<const Eigen::VectorXd>& u,
                        const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::exp(-0.5 * (u - v).squaredNorm());
}

Eigen::MatrixXd limit_covariance_hessian(const Eigen::Ref<const Eigen::VectorXd>& u) {
  const double e = std::exp(-0.5 * u.squaredNorm());
  Eigen::MatrixXd h = u * u.transpose();
  h -= Eigen::MatrixXd::Identity(u.size(), u.size());
  return e * h;
}

namespace {

constexpr double kZeroBand = 1e-13;

bool positive(double v) { return v > -kZeroBand; }

double interp(double a, double b) { return std::clamp(a / (a - b), 0.0, 1.0); }

}  // namespace

double marching_squares_length(const Eigen::MatrixXd& v, double h) {
  std::vector<double> lengths;
  for (Eigen::Index i = 0; i + 1 < v.rows(); ++i) {
    for (Eigen::Index j = 0; j + 1 < v.cols(); ++j) {
      // Corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1); x along i.
      const double c[4] = {v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)};
      const bool s[4] = {positive(c[0]), positive(c[1]), positive(c[2]), positive(c[3])};
      int changes = 0;
      for (int e = 0; e < 4; ++e) changes += s[e] != s[(e + 1) % 4];
      if (changes == 0) continue;
      // Crossing point on each edge in cell-local coordinates.
      const auto point = [&](int e) -> Eigen::Vector2d {
        const double t = interp(c[e], c[(e + 1) % 4]);
        switch (e) {
          case 0:
            return {t, 0.0};
          case 1:
            return {1.0, t};
          case 2:
            return {1.0 - t, 1.0};
          default:
            return {0.0, 1.0 - t};
        }
      };
      if (changes == 2) {
        int ends[2];
        int k = 0;
        for (int e = 0; e < 4; ++e) {
          if (s[e] != s[(e + 1) % 4]) ends[k++] = e;
        }
        lengths.push_back(h * (point(ends[0]) - point(ends[1])).norm());
      } else {
        // Saddle: the centre average decides which diagonal pair is joined.
        const bool centre = positive(0.25 * (c[0] + c[1] + c[2] + c[3]));
        if (centre == s[0]) {
          // Corners 1 and 3 are cut off.
          lengths.push_back(h * (point(0) - point(1)).norm());
          lengths.push_back(h * (point(2) - point(3)).norm());
        } else {
          // Corners 0 and 2 are cut off.
          lengths.push_back(h * (point(3) - point(0)).norm());
          lengths.push_back(h * (point(1) - point(2)).norm());
        }
      }
    }
  }
  return pairwise_sum(lengths);
}

namespace {

VolumeEstimate box_estimate(const Eigen::MatrixXd& values, double h) {
  VolumeEstimate est;
  est.method = VolumeMethod::marching;
  est.value = marching_squares_length(values, h);
  const Eigen::Index n = values.rows() - 1;
  if (n % 2 == 0 && n >= 4) {
    Eigen::MatrixXd half(n / 2 + 1, n / 2 + 1);
    for (Eigen::Index i = 0; i <= n / 2; ++i) {
      for (Eigen::Index j = 0; j <= n / 2; ++j) half(i, j) = values(2 * i, 2 * j);
    }
    est.error_estimate = std::abs(est.value - marching_squares_length(half, 2.0 * h));
  }
  return est;
}

Eigen::VectorXd axis(double centre, double side, int n) {
  return Eigen::VectorXd::LinSpaced(n + 1, centre - 0.5 * side, centre + 0.5 * side);
}

}  // namespace

VolumeEstimate nodal_length_box(const RandomWaveField& field, int n, const BoxSpec& box) {
  if (field.dim() != 2) throw DomainError("nodal_length_box needs m = 2");
  if (n < 64) throw DomainError("nodal_length_box: grid must have at least 64 cells per side");
  const Eigen::MatrixXd values = field.grid(axis(box.cx, box.side, n), axis(box.cy, box.side, n));
  return box_estimate(values, box.side / n);
}

VolumeEstimate nodal_length_box(const std::function<double(double, double)>& field, int n,
                                const BoxSpec& box) {
  if (n < 64) throw DomainError("nodal_length_box: grid must have at least 64 cells per side");
  const Eigen::VectorXd xs = axis(box.cx, box.side, n);
  const Eigen::VectorXd ys = axis(box.cy, box.side, n);
  Eigen::MatrixXd values(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) values(i, j) = field(xs[i], ys[j]);
  }
  return box_estimate(values, box.side / n);
}

double ef_integrability_check(double delta, int m) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("ef_integrability_check: delta in (0, 1]");
  if (m < 1) throw DomainError("ef_integrability_check: m must be positive");
  const Eigen::MatrixXd h0 = limit_covariance_hessian(Eigen::VectorXd::Zero(m));
  // |u|^{-m} du = rho^{-1} d rho dS; integrate the angle numerically for m = 2
  // and use rotation invariance of the Frobenius norm otherwise.
  const auto radial = [&](double rho, const Eigen::VectorXd& dir) {
    return (limit_covariance_hessian(rho * dir) - h0).norm() / rho;
  };
  if (m == 2) {
    const auto over_angle = [&](double phi) {
      Eigen::VectorXd dir(2);
      dir << std::cos(phi), std::sin(phi);
      return integrate_fixed([&](double rho) { return radial(rho, dir); }, 0.0, delta, 4, 16);
    };
    return integrate_fixed(over_angle, 0.0, 2.0 * kPi, 8, 16);
  }
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(m);
  dir[0] = 1.0;
  return sphere_volume(m - 1) *
         integrate_fixed([&](double rho) { return radial(rho, dir); }, 0.0, delta, 4, 16);
}

}  // namespace kss
