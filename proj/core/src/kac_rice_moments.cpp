#include "kss/kac_rice_moments.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "kss/error.hpp"
#include "kss/sphere_geometry.hpp"

namespace kss {

double expected_sqrt_det(int m, int r) {
  if (r < 1 || r > m) throw DomainError("expected_sqrt_det: need 1 <= r <= m");
  double log_prod = 0.0;
  for (int j = m - r + 1; j <= m; ++j) {
    log_prod += 0.5 * std::log(2.0) + std::lgamma(0.5 * (j + 1)) - std::lgamma(0.5 * j);
  }
  return std::exp(log_prod);
}

double expected_volume(int m, int r, int d) {
  if (r < 1 || r > m) throw DomainError("expected_volume: need 1 <= r <= m");
  if (d < 2) throw DomainError("expected_volume: degree must exceed 1");
  return sphere_volume(m) * std::pow(2.0 * kPi, -0.5 * r) * std::pow(d, 0.5 * r) *
         expected_sqrt_det(m, r);
}

ConditionalLaw conditional_law(const CovarianceProfile& p) { return {p.sigma2, p.rho, p.D}; }

ConditionalLaw conditional_law(const LimitProfile& p) { return {p.sigma2, p.rho, p.C}; }

namespace {

// Trapezoid grid in log s for the Laplace representation
// |x| = (1 / (2 sqrt(pi))) int_0^inf (1 - exp(-s |x|^2)) s^{-3/2} ds.
constexpr double kLogLo = -45.0;
constexpr double kLogHi = 45.0;
constexpr double kLogStep = 0.25;

int log_grid_size() { return static_cast<int>(std::lround((kLogHi - kLogLo) / kLogStep)) + 1; }

}  // namespace

double expected_scaled_norm(double sigma2, int m) {
  if (sigma2 < -1e-12 || sigma2 > 1.0 + 1e-12) throw DomainError("sigma2 outside [0, 1]");
  sigma2 = std::clamp(sigma2, 0.0, 1.0);
  if (m == 1) return std::sqrt(sigma2) * std::sqrt(2.0 / kPi);
  if (m == 2) return std::sqrt(2.0 / kPi) * std::comp_ellint_2(std::sqrt(1.0 - sigma2));
  const int n = log_grid_size();
  std::vector<double> terms(n);
  for (int i = 0; i < n; ++i) {
    const double u = kLogLo + i * kLogStep;
    const double s = std::exp(u);
    const double log_l = -0.5 * std::log1p(2.0 * sigma2 * s) - 0.5 * (m - 1) * std::log1p(2.0 * s);
    terms[i] = -std::expm1(log_l) * std::exp(-0.5 * u);
  }
  return kLogStep * pairwise_sum(terms) / (2.0 * std::sqrt(kPi));
}

double conditional_factor_exact(const ConditionalLaw& law, int m) {
  if (m < 1) throw DomainError("conditional_factor_exact: m must be positive");
  const double sigma2 = std::clamp(law.sigma2, 0.0, 1.0);
  const double rho = std::clamp(law.rho, -1.0, 1.0);
  const double dcorr = std::clamp(law.D, -1.0, 1.0);
  const double mean = expected_scaled_norm(sigma2, m);

  const int n = log_grid_size();
  std::vector<double> s(n);
  std::vector<double> a1(n);  // 1 + 2 sigma2 s
  std::vector<double> ak(n);  // 1 + 2 s
  std::vector<double> pre(n);  // s^{-1/2} L(s)
  for (int i = 0; i < n; ++i) {
    const double u = kLogLo + i * kLogStep;
    s[i] = std::exp(u);
    a1[i] = 1.0 + 2.0 * sigma2 * s[i];
    ak[i] = 1.0 + 2.0 * s[i];
    pre[i] = std::exp(-0.5 * u - 0.5 * std::log(a1[i]) - 0.5 * (m - 1) * std::log(ak[i]));
  }
  // log of det / product for one coordinate pair with variance a and correlation c
  const auto log_ratio = [](double a, double c, double si, double tj, double pi, double pj) {
    const double x = 4.0 * si * tj * a * a * c * c / (pi * pj);
    if (x < 0.5) return std::log1p(-x);
    const double det = 1.0 + 2.0 * a * (si + tj) + 4.0 * si * tj * a * a * (1.0 - c) * (1.0 + c);
    return std::log(det / (pi * pj));
  };

  std::vector<double> rows(n);
  std::vector<double> row_terms(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double sum_log = log_ratio(sigma2, rho, s[i], s[j], a1[i], a1[j]);
      if (m > 1) sum_log += (m - 1) * log_ratio(1.0, dcorr, s[i], s[j], ak[i], ak[j]);
      const double weight = (i == j) ? 1.0 : 2.0;
      row_terms[j - i] = weight * pre[i] * pre[j] * std::expm1(-0.5 * sum_log);
    }
    rows[i] = pairwise_sum(std::span<const double>(row_terms.data(), n - i));
  }
  const double cov = kLogStep * kLogStep * pairwise_sum(rows) / (4.0 * kPi);
  return mean * mean + cov;
}

GaussianBlock::GaussianBlock(int r, int m, int n_samples, std::uint64_t seed)
    : r_(r), m_(m), n_(n_samples), z_(n_samples, 2 * r * m) {
  if (r < 1 || r > m) throw DomainError("GaussianBlock: need 1 <= r <= m");
  if (n_samples < 1) throw DomainError("GaussianBlock: need at least one sample");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n_samples; ++i) {
    for (int k = 0; k < 2 * r * m; ++k) z_(i, k) = normal(rng);
  }
}

namespace {

double sqrt_det_rows(const Eigen::MatrixXd& z) {
  if (z.rows() == 1) return z.row(0).norm();
  const double det = (z * z.transpose()).determinant();
  return std::sqrt(std::max(det, 0.0));
}

FactorEstimate factor_mc(const ConditionalLaw& law, const GaussianBlock& block,
                         const std::vector<double>& mean_s, const std::vector<double>& mean_t,
                         int batches) {
  const int r = block.r();
  const int m = block.m();
  const int n = block.samples();
  if (law.sigma2 < -1e-12) throw ConsistencyError("conditional variance below zero");
  if (batches < 1 || batches > n) throw DomainError("invalid batch count");
  const double sigma = std::sqrt(std::clamp(law.sigma2, 0.0, 1.0));
  const double rho = std::clamp(law.rho, -1.0, 1.0);
  const double dcorr = std::clamp(law.D, -1.0, 1.0);
  const double rho_c = std::sqrt(std::max(0.0, (1.0 - rho) * (1.0 + rho)));
  const double d_c = std::sqrt(std::max(0.0, (1.0 - dcorr) * (1.0 + dcorr)));

  Eigen::MatrixXd zs(r, m);
  Eigen::MatrixXd zt(r, m);
  std::vector<double> values(n);
  const Eigen::MatrixXd& g = block.draws();
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < r; ++l) {
      const int base = 2 * m * l;
      for (int k = 0; k < m; ++k) {
        const double gm = g(i, base + k);
        const double gw = g(i, base + m + k);
        const double c = (k == 0) ? rho : dcorr;
        const double cc = (k == 0) ? rho_c : d_c;
        const double w = c * gm + cc * gw;
        if (k == 0) {
          zs(l, k) = sigma * gm + mean_s[l];
          zt(l, k) = sigma * w + mean_t[l];
        } else {
          zs(l, k) = gm;
          zt(l, k) = w;
        }
      }
    }
    values[i] = sqrt_det_rows(zs) * sqrt_det_rows(zt);
  }
  FactorEstimate est;
  const int per = n / batches;
  for (int b = 0; b < batches; ++b) {
    const int lo = b * per;
    const int hi = (b == batches - 1) ? n : lo + per;
    est.batch_means.push_back(pairwise_sum(std::span<const double>(values.data() + lo, hi - lo)) /
                              (hi - lo));
  }
  est.value = pairwise_sum(values) / n;
  double ss = 0.0;
  for (double x : values) ss += (x - est.value) * (x - est.value);
  est.standard_error = std::sqrt(ss / (n - 1.0) / n);
  return est;
}

}  // namespace

FactorEstimate conditional_factor_mc(const CovarianceProfile& p, const GaussianBlock& block,
                                     const std::vector<double>& u, int batches) {
  const int r = block.r();
  std::vector<double> ms(r, 0.0);
  std::vector<double> mt(r, 0.0);
  if (!u.empty()) {
    if (static_cast<int>(u.size()) != r) throw DomainError("u must have r entries");
    for (int l = 0; l < r; ++l) {
      ms[l] = -p.A * u[l] / (1.0 + p.C);
      mt[l] = p.A * u[l] / (1.0 + p.C);
    }
  }
  return factor_mc(conditional_law(p), block, ms, mt, batches);
}

FactorEstimate conditional_factor_mc(const ConditionalLaw& law, const GaussianBlock& block,
                                     int batches) {
  const std::vector<double> zero(block.r(), 0.0);
  return factor_mc(law, block, zero, zero, batches);
}

FactorEstimate conditional_factor(double theta, int d, int m, int r, int n_mc, std::uint64_t seed) {
  const CovarianceProfile p = profile(theta, d, m);
  if (p.degenerate) throw DomainError("conditional_factor: degenerate angle");
  GaussianBlock block(r, m, n_mc, seed);
  return conditional_factor_mc(p, block);
}

double pair_density(const CovarianceProfile& p, const std::vector<double>& u, int r) {
  if (p.degenerate) throw DomainError("pair_density: degenerate angle");
  double log_p = -r * std::log(2.0 * kPi) - 0.5 * r * std::log(p.one_minus_C2);
  for (double x : u) log_p -= x * x / (1.0 + p.C);
  return std::exp(log_p);
}

namespace {

struct Node {
  double x;
  double w;
};

std::vector<Node> composite_nodes(double a, double b, int panels, int per_panel) {
  const GaussRule& rule = gauss_legendre(per_panel);
  const double width = (b - a) / panels;
  std::vector<Node> out;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    for (int i = 0; i < per_panel; ++i) {
      out.push_back({mid + 0.5 * width * rule.nodes[i], 0.5 * width * rule.weights[i]});
    }
  }
  return out;
}

// Integrand value(s) at z: one entry per Monte Carlo batch, or a single entry.
using VectorIntegrand = std::function<std::vector<double>(double)>;

struct PanelSet {
  std::vector<double> fine;    // per component
  std::vector<double> coarse;  // per component
};

PanelSet integrate_components(const VectorIntegrand& f, double a, double b, int fine_panels,
                              int per_panel) {
  PanelSet out;
  const auto run = [&](int panels, std::vector<double>& acc) {
    std::vector<std::vector<double>> terms;
    for (const Node& node : composite_nodes(a, b, panels, per_panel)) {
      const std::vector<double> v = f(node.x);
      if (terms.empty()) terms.resize(v.size());
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k])) {
          throw IntegrationError("non-finite variance integrand at z = " + std::to_string(node.x));
        }
        terms[k].push_back(node.w * v[k]);
      }
    }
    for (const auto& t : terms) acc.push_back(pairwise_sum(t));
  };
  run(fine_panels, out.fine);
  run(std::max(1, fine_panels / 2), out.coarse);
  return out;
}

double mean_of(const std::vector<double>& v) { return pairwise_sum(v) / v.size(); }

double batch_se(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1.0) / v.size());
}

// Integrates the variance integrand over [0, upper] split at the diagonal panel.
MomentResult integrate_variance(const VectorIntegrand& f, double upper, double scale,
                                const SecondMomentOptions& options) {
  const double split = std::min(options.diagonal_panel, upper);
  const PanelSet diag = integrate_components(f, 0.0, split, 8, 16);
  PanelSet off;
  if (upper > split) {
    const int panels = std::max(2, 2 * static_cast<int>(std::ceil(upper - split)));
    off = integrate_components(f, split, upper, panels, 16);
  }
  const double diag_fine = mean_of(diag.fine);
  const double diag_coarse = mean_of(diag.coarse);
  const double diag_change = std::abs(diag_fine - diag_coarse);
  if (diag_change > options.rel_tol * std::max(std::abs(diag_fine), 1e-12) &&
      diag.fine.size() == 1) {
    throw IntegrationError("diagonal panel failed its refinement check: " +
                           std::to_string(diag_fine) + " vs " + std::to_string(diag_coarse));
  }
  std::vector<double> totals = diag.fine;
  double off_change = 0.0;
  if (!off.fine.empty()) {
    for (std::size_t k = 0; k < totals.size(); ++k) totals[k] += off.fine[k];
    off_change = std::abs(mean_of(off.fine) - mean_of(off.coarse));
  }
  MomentResult result;
  result.variance = scale * mean_of(totals);
  result.inner_mc_se = scale * batch_se(totals);
  result.quadrature_error = scale * (diag_change + off_change);
  return result;
}

InnerMethod resolve(InnerMethod method, int r) {
  if (method != InnerMethod::automatic) return method;
  return r == 1 ? InnerMethod::exact : InnerMethod::monte_carlo;
}

}  // namespace

MomentResult second_moment(int m, int r, int d, const SecondMomentOptions& options) {
  if (r < 1 || r >= m) throw DomainError("second_moment: need 1 <= r < m");
  if (d < 2) throw DomainError("second_moment: degree must exceed 1");
  const InnerMethod method = resolve(options.inner, r);
  if (method == InnerMethod::exact && r != 1) {
    throw DomainError("exact inner expectation is only available for r = 1");
  }
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const double ef = expected_sqrt_det(m, r);
  const double ef2 = ef * ef;
  const double norm = std::pow(2.0 * kPi, -r);
  // Var = d^{r - m/2} 2 kappa_m kappa_{m-1} int (sqrt(d) sin(z/sqrt d))^{m-1}
  //       (2 pi)^{-r} [F(z) (1 - C^2)^{-r/2} - (E f)^2] dz over [0, sqrt(d) pi / 2].
  const double scale =
      std::pow(d, r - 0.5 * m) * 2.0 * sphere_volume(m) * sphere_volume(m - 1) * norm;
  const double upper = std::min(options.z_max, sqrt_d * 0.5 * kPi);

  VectorIntegrand f;
  std::unique_ptr<GaussianBlock> block;
  std::vector<double> decorrelated;
  if (method == InnerMethod::exact) {
    f = [&](double z) {
      const CovarianceProfile p = profile(z / sqrt_d, d, m);
      const double jac = std::pow(sqrt_d * std::sin(z / sqrt_d), m - 1);
      const double factor = conditional_factor_exact(conditional_law(p), m);
      return std::vector<double>{jac * (factor / std::sqrt(p.one_minus_C2) - ef2)};
    };
  } else {
    block = std::make_unique<GaussianBlock>(r, m, options.n_mc, options.seed);
    decorrelated = conditional_factor_mc(ConditionalLaw{1.0, 0.0, 0.0}, *block, options.batches)
                       .batch_means;
    // Control variate: F - F_decorrelated vanishes far from the diagonal on
    // the same draws, so the large (E f)^2 term is carried exactly.
    f = [&](double z) {
      const CovarianceProfile p = profile(z / sqrt_d, d, m);
      const double jac = std::pow(sqrt_d * std::sin(z / sqrt_d), m - 1);
      const double dens = std::pow(p.one_minus_C2, -0.5 * r);
      const FactorEstimate est = conditional_factor_mc(p, *block, {}, options.batches);
      std::vector<double> out(est.batch_means.size());
      for (std::size_t b = 0; b < out.size(); ++b) {
        out[b] = jac * ((est.batch_means[b] - decorrelated[b]) * dens + ef2 * (dens - 1.0));
      }
      return out;
    };
  }
  MomentResult result = integrate_variance(f, upper, scale, options);
  result.expected = expected_volume(m, r, d);
  result.second_moment = result.variance + result.expected * result.expected;
  return result;
}

MomentResult limit_variance(int m, int r, const SecondMomentOptions& options) {
  if (r < 1 || r >= m) throw DomainError("limit_variance: need 1 <= r < m");
  const InnerMethod method = resolve(options.inner, r);
  if (method != InnerMethod::exact) {
    throw DomainError("limit_variance uses the exact inner expectation (r = 1)");
  }
  const double ef = expected_sqrt_det(m, r);
  const double ef2 = ef * ef;
  const double scale = 2.0 * sphere_volume(m) * sphere_volume(m - 1) * std::pow(2.0 * kPi, -r);
  const VectorIntegrand f = [&](double z) {
    const LimitProfile p = limit_profile(z);
    const double factor = conditional_factor_exact(conditional_law(p), m);
    return std::vector<double>{std::pow(z, m - 1) *
                               (factor * std::pow(p.one_minus_C2, -0.5 * r) - ef2)};
  };
  return integrate_variance(f, options.z_max, scale, options);
}

namespace {

// Barycentric interpolation through Chebyshev points of the first kind.
class ChebyshevInterpolant {
 public:
  ChebyshevInterpolant(const std::function<double(double)>& f, double a, double b, int n)
      : a_(a), b_(b), x_(n), y_(n), w_(n) {
    for (int j = 0; j < n; ++j) {
      const double angle = (2.0 * j + 1.0) * kPi / (2.0 * n);
      x_[j] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(angle);
      y_[j] = f(x_[j]);
      w_[j] = ((j % 2 == 0) ? 1.0 : -1.0) * std::sin(angle);
    }
  }

  double operator()(double x) const {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < x_.size(); ++j) {
      const double diff = x - x_[j];
      if (diff == 0.0) return y_[j];
      const double c = w_[j] / diff;
      num += c * y_[j];
      den += c;
    }
    return num / den;
  }

 private:
  double a_;
  double b_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> w_;
};

double box_variance(const std::function<double(double)>& h, int n_cheb) {
  const ChebyshevInterpolant hz(h, 0.0, std::sqrt(2.0), n_cheb);
  // 8 int_0^{pi/4} dphi int_0^{1/cos phi} h(z) (1 - z cos phi)(1 - z sin phi) dz
  const auto inner = [&](double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return integrate_fixed([&](double z) { return hz(z) * (1.0 - z * c) * (1.0 - z * s); }, 0.0,
                           1.0 / c, 2, 24);
  };
  return 8.0 * integrate_fixed(inner, 0.0, 0.25 * kPi, 2, 24);
}

}  // namespace

BoxVariance limit_variance_box(int m, int r) {
  if (m != 2 || r != 1) throw DomainError("limit_variance_box supports m = 2, r = 1 only");
  const double ef = expected_sqrt_det(m, r);
  const double ef2 = ef * ef;
  // h(z) = z (2 pi)^{-1} [F(z) / sqrt(1 - e^{-z^2}) - (E f)^2]; finite as z -> 0.
  const auto h = [&](double z) {
    const LimitProfile p = limit_profile(z);
    const double factor = conditional_factor_exact(conditional_law(p), m);
    return z * (factor / std::sqrt(p.one_minus_C2) - ef2) / (2.0 * kPi);
  };
  BoxVariance out;
  out.mean = ef / std::sqrt(2.0 * kPi);
  out.variance = box_variance(h, 40);
  out.quadrature_error = std::abs(out.variance - box_variance(h, 28));
  return out;
}

}  // namespace kss
