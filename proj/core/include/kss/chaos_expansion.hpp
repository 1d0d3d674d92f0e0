#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kss {

/// Probabilists' Hermite polynomial He_n(x).
double hermite(int n, double x);

/// E[H_k(Z) H_l(W)] for standard Gaussians with correlation corr.
double mehler_moment(int k, int l, double corr);

/// Hermite coefficient of the Dirac delta at 0 in L^2(R^r, standard normal).
double b_alpha(std::span<const int> alpha);

/// Second moment of sqrt(det(G G^T)) for G an r x m standard Gaussian matrix.
double f_norm_sq(int r, int m);

enum class FBetaMethod { automatic, closed_form, gauss_hermite, monte_carlo };

struct FBetaOptions {
  FBetaMethod method = FBetaMethod::automatic;
  int gh_nodes = 40;
  double gh_tolerance = 1e-3;  // relative change between gh_nodes/2 and gh_nodes
  std::int64_t mc_samples = 10'000'000;
  std::uint64_t mc_seed = 0x6b73734d43ULL;
};

/// True if beta (r x m, row-major) has an odd row or column sum; the
/// coefficient is then exactly zero by the sign symmetries of sqrt(det).
bool f_beta_vanishes(std::span<const int> beta, int r, int m);

/// f_beta = E[sqrt(det(G G^T)) H_beta(G)] / beta!, G an r x m standard Gaussian
/// matrix, beta row-major. Closed form for r = 1, tensor Gauss-Hermite for
/// r*m <= 4, Monte Carlo otherwise (unless options force a method).
double f_beta(std::span<const int> beta, int r, int m, const FBetaOptions& options = {});

/// E[H_a(Y(s)) H_a'(Y(t)) H_b(Y'(s)) H_b'(Y'(t))] for a Gaussian 4-vector with
/// unit variances, zero covariance inside each point, Cov(Y(s),Y(t)) = rho,
/// Cov(Y(s),Y'(t)) = rho_st, Cov(Y'(s),Y(t)) = rho_ts, Cov(Y'(s),Y'(t)) = rho_pp.
double lambda_fourth_moment(int a, int a_prime, int b, int b_prime, double rho, double rho_st,
                            double rho_ts, double rho_pp);
/// Same with a single cross-correlation used for both mixed pairs.
double lambda_fourth_moment(int a, int a_prime, int b, int b_prime, double rho, double rho_prime,
                            double rho_pp);

/// One nonzero term a_mu H_mu of the expansion. alpha has r entries, beta r*m
/// entries in row-major order (equation, tangent direction).
struct ChaosTerm {
  std::vector<int> alpha;
  std::vector<int> beta;
  int order = 0;
  double b = 0.0;
  double f = 0.0;
  double a = 0.0;
  double mu_factorial = 1.0;
};

/// Cross-covariances between the standardized vectors at s and t in the
/// canonical frames (see covariance_kernel.hpp).
struct CrossCovariance {
  double C = 0.0;
  double A_st = 0.0;  // Cov(Y(s), Ybar'_1(t))
  double A_ts = 0.0;  // Cov(Ybar'_1(s), Y(t))
  double B = 0.0;
  double D = 0.0;
};

CrossCovariance cross_covariance_at_angle(double theta, int d);
/// From the inner product x = <s,t>; exact sign symmetry under x -> -x.
CrossCovariance cross_covariance_from_cosine(double x, int d);
CrossCovariance cross_covariance_limit(double z);

class ChaosCoefficientTable {
 public:
  ChaosCoefficientTable(int r, int m, int q_max, const FBetaOptions& options = {});

  int r() const noexcept { return r_; }
  int m() const noexcept { return m_; }
  int q_max() const noexcept { return q_max_; }

  /// All alpha / beta with order <= q_max, including exact zeros.
  const std::map<std::vector<int>, double>& b_table() const noexcept { return b_; }
  const std::map<std::vector<int>, double>& f_table() const noexcept { return f_; }
  double b(const std::vector<int>& alpha) const;
  double f(const std::vector<int>& beta) const;

  /// Nonzero products a_mu = b_alpha f_beta of the given order.
  const std::vector<ChaosTerm>& terms(int q) const;

  /// sum over |mu| = q of a_mu^2 mu!.
  double norm_g_sq(int q) const;

  /// Cov(g_q(Z(s)), g_q(Z(t))) for the given cross-covariances.
  double htilde(int q, const CrossCovariance& cov) const;

  std::string to_json() const;
  static ChaosCoefficientTable from_json(std::string_view text);

 private:
  ChaosCoefficientTable() = default;
  void build_terms();

  struct Group {
    std::vector<int> tail;          // beta_{l,j}, j >= 2, for each l
    std::vector<std::size_t> members;
  };

  int r_ = 1;
  int m_ = 1;
  int q_max_ = 0;
  std::map<std::vector<int>, double> b_;
  std::map<std::vector<int>, double> f_;
  std::vector<std::vector<ChaosTerm>> terms_;
  std::vector<std::vector<Group>> groups_;
};

double htilde_qd(double x, int q, int d, const ChaosCoefficientTable& table);
double htilde_at_angle(double theta, int q, int d, const ChaosCoefficientTable& table);
double htilde_limit(double z, int q, const ChaosCoefficientTable& table);

/// g_q(z) with z = (y_1..y_r, y'_11..y'_1m, ..., y'_r1..y'_rm).
double g_q_eval(int q, std::span<const double> z, const ChaosCoefficientTable& table);

struct ChaosVarianceReport {
  int q = 0;
  double value_finite_d = 0.0;
  double value_limit = 0.0;
  double quadrature_error = 0.0;
};

/// Scaled variance d^{m/2} E[(int g_q(Z_d))^2] of the q-th chaos at degree d
/// together with its d -> infinity limit. Zero for odd q and for q = 0 (the
/// constant term carries the mean, not variance).
ChaosVarianceReport chaos_variance_term(int q, int d, const ChaosCoefficientTable& table,
                                        double z_max = 12.0);

/// Limit of chaos_variance_term as d -> infinity.
ChaosVarianceReport chaos_variance_limit(int q, const ChaosCoefficientTable& table,
                                         double z_max = 12.0);

}  // namespace kss
