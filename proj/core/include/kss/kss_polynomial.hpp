#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kss/sphere_geometry.hpp"

namespace kss {

using MultiIndex = std::vector<int>;

/// Number of multi-indices of weight d in m+1 variables, C(d+m, m).
/// Throws DomainError if the count does not fit in size_t.
std::size_t multi_index_count(int m, int d);

/// All j in N^{m+1} with |j| = d, lexicographic with j_0 descending.
std::vector<MultiIndex> enumerate_multi_indices(int m, int d);

/// Position of `j` in the order of enumerate_multi_indices.
std::size_t multi_index_position(std::span<const int> j);

/// Homogeneous monomials of one degree, in enumeration order. Knows how to
/// fill the vector of monomial values t^j at a point.
class MonomialBasis {
 public:
  MonomialBasis(int m, int d);

  int m() const noexcept { return m_; }
  int degree() const noexcept { return d_; }
  std::size_t size() const noexcept { return size_; }

  /// out[i] = t^{j_i}; `powers` is scratch of size (m+1)*(d+1).
  void fill(const double* t, double* out, double* powers) const;

 private:
  void sweep(int level, int remaining, double prefix, const double* powers, double*& out) const;

  int m_;
  int d_;
  std::size_t size_;
};

/// r homogeneous polynomials of common degree d in m+1 variables. Immutable.
class KssSystem {
 public:
  /// coeffs is r x C(d+m,m), rows in enumeration order.
  KssSystem(int m, int d, std::uint64_t seed, Eigen::MatrixXd coeffs);

  /// Single polynomial from explicit (multi-index, coefficient) terms.
  static KssSystem from_terms(int m, int d, const std::vector<std::pair<MultiIndex, double>>& terms);

  int m() const noexcept { return m_; }
  int d() const noexcept { return d_; }
  int r() const noexcept { return static_cast<int>(coeffs_.rows()); }
  std::uint64_t seed() const noexcept { return seed_; }
  const Eigen::MatrixXd& coeffs() const noexcept { return coeffs_; }
  const MonomialBasis& basis() const noexcept { return basis_; }
  const MonomialBasis& derivative_basis() const noexcept { return dbasis_; }
  /// Coefficients of dY/dt_k over the degree d-1 basis, one r x N' block per k.
  const std::vector<Eigen::MatrixXd>& derivative_coeffs() const noexcept { return dcoeffs_; }

 private:
  int m_;
  int d_;
  std::uint64_t seed_;
  Eigen::MatrixXd coeffs_;
  MonomialBasis basis_;
  MonomialBasis dbasis_;
  std::vector<Eigen::MatrixXd> dcoeffs_;
};

/// Standard deviation sqrt(d!/prod j_k!) of the coefficient at multi-index j.
double kss_coefficient_scale(std::span<const int> j);

/// Independent N(0, d!/prod j_k!) coefficients drawn from mt19937_64(seed).
KssSystem sample_kss(int m, int d, int r, std::uint64_t seed);

/// Scratch space for evaluating one system. Not thread-safe; use one per thread.
class Evaluator {
 public:
  explicit Evaluator(const KssSystem& sys);
  explicit Evaluator(KssSystem&&) = delete;

  const KssSystem& system() const noexcept { return *sys_; }

  /// Y(t) for any finite t in R^{m+1}.
  Eigen::VectorXd value(const Eigen::Ref<const Eigen::VectorXd>& t);
  /// First component only; avoids allocation in hot loops.
  double value_first(const double* t);
  /// Ambient gradient, r x (m+1).
  Eigen::MatrixXd gradient(const Eigen::Ref<const Eigen::VectorXd>& t);
  /// Ambient gradient of the first component into out[0..m].
  void gradient_first(const double* t, double* out);

 private:
  void check(const Eigen::Ref<const Eigen::VectorXd>& t) const;

  const KssSystem* sys_;
  Eigen::VectorXd mono_;
  Eigen::VectorXd dmono_;
  std::vector<double> powers_;
};

Eigen::VectorXd evaluate(const KssSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& t);

/// Field value and normalized tangential derivative at a sphere point.
struct JetEvaluation {
  Eigen::VectorXd y;           // r
  Eigen::MatrixXd ybar_prime;  // r x m, (grad Y_l . basis_k) / sqrt(d)
};

JetEvaluation jet_on_sphere(const KssSystem& sys, const SpherePoint& t, const TangentFrame& frame);

/// phi -> Y(cos phi u + sin phi v) on a great circle.
class CircleRestriction {
 public:
  CircleRestriction(const KssSystem& sys, const SpherePoint& u, const SpherePoint& v);
  CircleRestriction(KssSystem&&, const SpherePoint&, const SpherePoint&) = delete;

  Eigen::VectorXd operator()(double phi);
  /// First component and its phi-derivative.
  std::pair<double, double> value_and_slope(double phi);

 private:
  Evaluator eval_;
  Eigen::VectorXd u_;
  Eigen::VectorXd v_;
  Eigen::VectorXd point_;
  std::vector<double> grad_;
};

CircleRestriction restrict_to_circle(const KssSystem& sys, const SpherePoint& u,
                                     const SpherePoint& v);
CircleRestriction restrict_to_circle(KssSystem&&, const SpherePoint&, const SpherePoint&) = delete;

std::string to_json(const KssSystem& sys);
KssSystem kss_from_json(std::string_view text);

}  // namespace kss
