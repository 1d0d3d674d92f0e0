#include "kss/chaos_expansion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "kss/covariance_kernel.hpp"
#include "kss/error.hpp"
#include "kss/numeric.hpp"
#include "kss/sphere_geometry.hpp"

namespace kss {
namespace {

// Integer power by repeated squaring: (-x)^n == (-1)^n x^n bit for bit.
double ipow(double x, int n) {
  double result = 1.0;
  double base = x;
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

int total(std::span<const int> v) { return std::accumulate(v.begin(), v.end(), 0); }

double multi_factorial(std::span<const int> v) {
  double f = 1.0;
  for (int x : v) f *= factorial(x);
  return f;
}

double sqrt_det_gram(const double* y, int r, int m) {
  if (r == 1) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += y[j] * y[j];
    return std::sqrt(s);
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g(y, r, m);
  const double det = (g * g.transpose()).determinant();
  return std::sqrt(std::max(det, 0.0));
}

// All vectors of `len` naturals with sum <= max_total.
void enumerate_bounded(int len, int max_total, std::vector<std::vector<int>>& out) {
  std::vector<int> v(len, 0);
  const auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == len) {
      out.push_back(v);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      v[pos] = x;
      self(self, pos + 1, left - x);
    }
    v[pos] = 0;
  };
  rec(rec, 0, max_total);
}

double f_beta_closed_form(std::span<const int> beta, int m) {
  int k_total = 0;
  double log_k_fact = 0.0;
  for (int b : beta) {
    if (b % 2 != 0) return 0.0;
    k_total += b / 2;
    log_k_fact += log_factorial(b / 2);
  }
  // E[|G| H_beta(G)] / beta! for G ~ N(0, I_m), beta = 2k:
  // (-1)^{K+1} 2^{-1/2-K} Gamma(K-1/2) Gamma((m+1)/2) / (sqrt(pi) Gamma(K+m/2) prod k_j!)
  const double k = k_total;
  const double gamma_km = std::tgamma(k - 0.5);  // negative only at K = 0
  const double log_mag = (-0.5 - k) * std::log(2.0) + std::log(std::abs(gamma_km)) +
                         std::lgamma(0.5 * (m + 1)) - 0.5 * std::log(kPi) -
                         std::lgamma(k + 0.5 * m) - log_k_fact;
  const double sign = ((k_total + 1) % 2 == 0 ? 1.0 : -1.0) * (gamma_km < 0 ? -1.0 : 1.0);
  return sign * std::exp(log_mag);
}

struct BatchResult {
  std::vector<double> value;
  std::vector<double> error;
};

BatchResult f_beta_gauss_hermite(const std::vector<std::vector<int>>& betas, int r, int m,
                                 int nodes) {
  const int dims = r * m;
  int max_order = 0;
  for (const auto& b : betas) max_order = std::max(max_order, *std::max_element(b.begin(), b.end()));
  const GaussRule& rule = gauss_hermite(nodes);
  // herm[i][k] = H_k(node_i)
  std::vector<std::vector<double>> herm(nodes, std::vector<double>(max_order + 1));
  for (int i = 0; i < nodes; ++i) {
    for (int k = 0; k <= max_order; ++k) herm[i][k] = hermite(k, rule.nodes[i]);
  }
  std::vector<double> acc(betas.size(), 0.0);
  std::vector<int> idx(dims, 0);
  std::vector<double> y(dims);
  while (true) {
    double w = 1.0;
    for (int j = 0; j < dims; ++j) {
      y[j] = rule.nodes[idx[j]];
      w *= rule.weights[idx[j]];
    }
    const double fw = w * sqrt_det_gram(y.data(), r, m);
    for (std::size_t b = 0; b < betas.size(); ++b) {
      double h = fw;
      for (int j = 0; j < dims; ++j) h *= herm[idx[j]][betas[b][j]];
      acc[b] += h;
    }
    int j = dims - 1;
    while (j >= 0 && ++idx[j] == nodes) idx[j--] = 0;
    if (j < 0) break;
  }
  BatchResult out;
  for (std::size_t b = 0; b < betas.size(); ++b) {
    out.value.push_back(acc[b] / multi_factorial(betas[b]));
  }
  out.error.assign(betas.size(), 0.0);
  return out;
}

BatchResult f_beta_monte_carlo(const std::vector<std::vector<int>>& betas, int r, int m,
                               std::int64_t samples, std::uint64_t seed) {
  const int dims = r * m;
  int max_order = 0;
  for (const auto& b : betas) max_order = std::max(max_order, *std::max_element(b.begin(), b.end()));
  Rng rng(seed);
  std::vector<double> y(dims);
  std::vector<std::vector<double>> herm(dims, std::vector<double>(max_order + 1));
  std::vector<double> sum(betas.size(), 0.0);
  std::vector<double> sum_sq(betas.size(), 0.0);
  for (std::int64_t n = 0; n < samples; ++n) {
    fill_standard_normal(rng, y);
    const double fy = sqrt_det_gram(y.data(), r, m);
    for (int j = 0; j < dims; ++j) {
      for (int k = 0; k <= max_order; ++k) herm[j][k] = hermite(k, y[j]);
    }
    for (std::size_t b = 0; b < betas.size(); ++b) {
      double h = fy;
      for (int j = 0; j < dims; ++j) h *= herm[j][betas[b][j]];
      sum[b] += h;
      sum_sq[b] += h * h;
    }
  }
  BatchResult out;
  const double n = static_cast<double>(samples);
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const double mean = sum[b] / n;
    const double var = std::max(0.0, sum_sq[b] / n - mean * mean);
    const double scale = multi_factorial(betas[b]);
    out.value.push_back(mean / scale);
    out.error.push_back(std::sqrt(var / n) / scale);
  }
  return out;
}

FBetaMethod resolve(FBetaMethod method, int r, int m) {
  if (method != FBetaMethod::automatic) return method;
  if (r == 1) return FBetaMethod::closed_form;
  return r * m <= 4 ? FBetaMethod::gauss_hermite : FBetaMethod::monte_carlo;
}

// Evaluates f_beta for every beta in the list with one pass over the rule.
std::vector<double> f_beta_batch(const std::vector<std::vector<int>>& betas, int r, int m,
                                 const FBetaOptions& options) {
  std::vector<double> out(betas.size(), 0.0);
  std::vector<std::vector<int>> live;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (static_cast<int>(betas[i].size()) != r * m) throw DomainError("beta has wrong size");
    if (!f_beta_vanishes(betas[i], r, m)) {
      live.push_back(betas[i]);
      where.push_back(i);
    }
  }
  if (live.empty()) return out;
  const FBetaMethod method = resolve(options.method, r, m);
  std::vector<double> values;
  switch (method) {
    case FBetaMethod::closed_form:
      if (r != 1) throw DomainError("closed-form f_beta is only available for r = 1");
      for (const auto& b : live) values.push_back(f_beta_closed_form(b, m));
      break;
    case FBetaMethod::gauss_hermite: {
      const int n = options.gh_nodes;
      const BatchResult fine = f_beta_gauss_hermite(live, r, m, n);
      const BatchResult coarse = f_beta_gauss_hermite(live, r, m, std::max(2, n / 2));
      for (std::size_t b = 0; b < live.size(); ++b) {
        const double change = std::abs(fine.value[b] - coarse.value[b]);
        const double scale = std::max(std::abs(fine.value[b]), 1e-2);
        if (change > options.gh_tolerance * scale) {
          std::ostringstream msg;
          msg << "Gauss-Hermite f_beta did not converge: change " << change << " at " << n
              << " nodes (value " << fine.value[b] << ")";
          throw IntegrationError(msg.str());
        }
      }
      values = fine.value;
      break;
    }
    case FBetaMethod::monte_carlo:
      values = f_beta_monte_carlo(live, r, m, options.mc_samples, options.mc_seed).value;
      break;
    case FBetaMethod::automatic:
      break;
  }
  for (std::size_t i = 0; i < where.size(); ++i) out[where[i]] = values[i];
  return out;
}

std::string key_string(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<int> parse_key(const std::string& s) {
  std::vector<int> v;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) v.push_back(std::stoi(item));
  return v;
}

}  // namespace

double hermite(int n, double x) {
  if (n < 0) throw DomainError("hermite: negative order");
  if (n == 0) return 1.0;
  double h0 = 1.0;
  double h1 = x;
  for (int k = 1; k < n; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

double mehler_moment(int k, int l, double corr) {
  if (std::abs(corr) > 1.0 + 1e-12) throw DomainError("mehler_moment: |corr| > 1");
  if (k != l) return 0.0;
  return ipow(corr, k) * factorial(k);
}

double b_alpha(std::span<const int> alpha) {
  double b = 1.0;
  for (int a : alpha) {
    if (a < 0) throw DomainError("b_alpha: negative index");
    if (a % 2 != 0) return 0.0;
    const int h = a / 2;
    b *= ipow(-0.5, h) / (std::sqrt(2.0 * kPi) * factorial(h));
  }
  return b;
}

double f_norm_sq(int r, int m) {
  if (r < 1 || r > m) throw DomainError("f_norm_sq: need 1 <= r <= m");
  return factorial(m) / factorial(m - r);
}

bool f_beta_vanishes(std::span<const int> beta, int r, int m) {
  for (int l = 0; l < r; ++l) {
    int row = 0;
    for (int j = 0; j < m; ++j) row += beta[l * m + j];
    if (row % 2 != 0) return true;
  }
  for (int j = 0; j < m; ++j) {
    int col = 0;
    for (int l = 0; l < r; ++l) col += beta[l * m + j];
    if (col % 2 != 0) return true;
  }
  return false;
}

double f_beta(std::span<const int> beta, int r, int m, const FBetaOptions& options) {
  if (r < 1 || r > m) throw DomainError("f_beta: need 1 <= r <= m");
  return f_beta_batch({std::vector<int>(beta.begin(), beta.end())}, r, m, options)[0];
}

double lambda_fourth_moment(int a, int a_prime, int b, int b_prime, double rho, double rho_st,
                            double rho_ts, double rho_pp) {
  if (a < 0 || a_prime < 0 || b < 0 || b_prime < 0) {
    throw DomainError("lambda_fourth_moment: negative order");
  }
  if (a + b != a_prime + b_prime) return 0.0;
  // d1 pairs Y(s)-Y(t), d2 Y(s)-Y'(t), d3 Y'(s)-Y(t), d4 Y'(s)-Y'(t).
  const double scale = factorial(a) * factorial(a_prime) * factorial(b) * factorial(b_prime);
  double sum = 0.0;
  for (int d1 = 0; d1 <= std::min(a, a_prime); ++d1) {
    const int d2 = a - d1;
    const int d3 = a_prime - d1;
    const int d4 = b - d3;
    if (d4 < 0 || d2 + d4 != b_prime) continue;
    sum += scale / (factorial(d1) * factorial(d2) * factorial(d3) * factorial(d4)) *
           ipow(rho, d1) * ipow(rho_st, d2) * ipow(rho_ts, d3) * ipow(rho_pp, d4);
  }
  return sum;
}

double lambda_fourth_moment(int a, int a_prime, int b, int b_prime, double rho, double rho_prime,
                            double rho_pp) {
  return lambda_fourth_moment(a, a_prime, b, b_prime, rho, rho_prime, rho_prime, rho_pp);
}

CrossCovariance cross_covariance_at_angle(double theta, int d) {
  const CovarianceProfile p = profile(theta, d, 1);
  return {p.C, p.A, -p.A, p.B, p.D};
}

CrossCovariance cross_covariance_from_cosine(double x, int d) {
  if (!(std::abs(x) <= 1.0)) throw DomainError("inner product outside [-1, 1]");
  CrossCovariance c = cross_covariance_at_angle(std::acos(std::abs(x)), d);
  if (x < 0.0) {
    const double even = (d % 2 == 0) ? 1.0 : -1.0;  // (-1)^d
    c.C *= even;
    c.B *= even;
    c.A_st *= -even;
    c.A_ts *= -even;
    c.D *= -even;
  }
  return c;
}

CrossCovariance cross_covariance_limit(double z) {
  const LimitProfile p = limit_profile(z);
  return {p.C, p.A, -p.A, p.B, p.C};
}

ChaosCoefficientTable::ChaosCoefficientTable(int r, int m, int q_max, const FBetaOptions& options)
    : r_(r), m_(m), q_max_(q_max) {
  if (r < 1 || r > m) throw DomainError("chaos table: need 1 <= r <= m");
  if (q_max < 0) throw DomainError("chaos table: negative truncation order");
  std::vector<std::vector<int>> alphas;
  enumerate_bounded(r, q_max, alphas);
  for (const auto& a : alphas) b_[a] = b_alpha(a);
  std::vector<std::vector<int>> betas;
  enumerate_bounded(r * m, q_max, betas);
  const std::vector<double> f = f_beta_batch(betas, r, m, options);
  for (std::size_t i = 0; i < betas.size(); ++i) f_[betas[i]] = f[i];
  build_terms();
}

void ChaosCoefficientTable::build_terms() {
  terms_.assign(q_max_ + 1, {});
  for (const auto& [alpha, b] : b_) {
    if (b == 0.0) continue;
    const int qa = total(alpha);
    for (const auto& [beta, f] : f_) {
      if (f == 0.0) continue;
      const int q = qa + total(beta);
      if (q > q_max_) continue;
      ChaosTerm t;
      t.alpha = alpha;
      t.beta = beta;
      t.order = q;
      t.b = b;
      t.f = f;
      t.a = b * f;
      t.mu_factorial = multi_factorial(alpha) * multi_factorial(beta);
      terms_[q].push_back(std::move(t));
    }
  }
  // Terms that can pair in the covariance share alpha_l + beta_l1 and every
  // beta_lj with j >= 2.
  groups_.assign(q_max_ + 1, {});
  for (int q = 0; q <= q_max_; ++q) {
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t i = 0; i < terms_[q].size(); ++i) {
      const ChaosTerm& t = terms_[q][i];
      std::vector<int> key;
      std::vector<int> tail;
      for (int l = 0; l < r_; ++l) {
        key.push_back(t.alpha[l] + t.beta[l * m_]);
        for (int j = 1; j < m_; ++j) tail.push_back(t.beta[l * m_ + j]);
      }
      key.insert(key.end(), tail.begin(), tail.end());
      auto [it, inserted] = index.try_emplace(key, groups_[q].size());
      if (inserted) groups_[q].push_back({tail, {}});
      groups_[q][it->second].members.push_back(i);
    }
  }
}

double ChaosCoefficientTable::b(const std::vector<int>& alpha) const {
  auto it = b_.find(alpha);
  if (it == b_.end()) throw DomainError("alpha outside the table");
  return it->second;
}

double ChaosCoefficientTable::f(const std::vector<int>& beta) const {
  auto it = f_.find(beta);
  if (it == f_.end()) throw DomainError("beta outside the table");
  return it->second;
}

const std::vector<ChaosTerm>& ChaosCoefficientTable::terms(int q) const {
  if (q < 0 || q > q_max_) {
    throw DomainError("order " + std::to_string(q) + " exceeds table truncation " +
                      std::to_string(q_max_));
  }
  return terms_[q];
}

double ChaosCoefficientTable::norm_g_sq(int q) const {
  double s = 0.0;
  for (const auto& t : terms(q)) s += t.a * t.a * t.mu_factorial;
  return s;
}

double ChaosCoefficientTable::htilde(int q, const CrossCovariance& cov) const {
  if (q % 2 != 0) return 0.0;
  const auto& list = terms(q);
  double sum = 0.0;
  for (const Group& g : groups_[q]) {
    double weight = 1.0;
    for (int k : g.tail) weight *= factorial(k) * ipow(cov.D, k);
    if (weight == 0.0) continue;
    double inner = 0.0;
    for (std::size_t i : g.members) {
      const ChaosTerm& s = list[i];
      for (std::size_t j : g.members) {
        const ChaosTerm& t = list[j];
        double prod = s.a * t.a;
        for (int l = 0; l < r_ && prod != 0.0; ++l) {
          prod *= lambda_fourth_moment(s.alpha[l], t.alpha[l], s.beta[l * m_], t.beta[l * m_],
                                       cov.C, cov.A_st, cov.A_ts, cov.B);
        }
        inner += prod;
      }
    }
    sum += weight * inner;
  }
  return sum;
}

std::string ChaosCoefficientTable::to_json() const {
  nlohmann::json j;
  j["r"] = r_;
  j["m"] = m_;
  j["q_max"] = q_max_;
  nlohmann::json b = nlohmann::json::object();
  for (const auto& [k, v] : b_) b[key_string(k)] = v;
  nlohmann::json f = nlohmann::json::object();
  for (const auto& [k, v] : f_) f[key_string(k)] = v;
  j["b"] = b;
  j["f"] = f;
  return j.dump(2);
}

ChaosCoefficientTable ChaosCoefficientTable::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ChaosCoefficientTable t;
    t.r_ = j.at("r").get<int>();
    t.m_ = j.at("m").get<int>();
    t.q_max_ = j.at("q_max").get<int>();
    for (const auto& [k, v] : j.at("b").items()) t.b_[parse_key(k)] = v.get<double>();
    for (const auto& [k, v] : j.at("f").items()) t.f_[parse_key(k)] = v.get<double>();
    t.build_terms();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed chaos table JSON: ") + e.what());
  }
}

double htilde_qd(double x, int q, int d, const ChaosCoefficientTable& table) {
  return table.htilde(q, cross_covariance_from_cosine(x, d));
}

double htilde_at_angle(double theta, int q, int d, const ChaosCoefficientTable& table) {
  return table.htilde(q, cross_covariance_at_angle(theta, d));
}

double htilde_limit(double z, int q, const ChaosCoefficientTable& table) {
  return table.htilde(q, cross_covariance_limit(z));
}

double g_q_eval(int q, std::span<const double> z, const ChaosCoefficientTable& table) {
  const int r = table.r();
  const int m = table.m();
  if (static_cast<int>(z.size()) != r * (1 + m)) throw DomainError("g_q_eval: wrong argument size");
  double sum = 0.0;
  for (const auto& t : table.terms(q)) {
    double h = t.a;
    for (int l = 0; l < r; ++l) h *= hermite(t.alpha[l], z[l]);
    for (int k = 0; k < r * m; ++k) h *= hermite(t.beta[k], z[r + k]);
    sum += h;
  }
  return sum;
}

namespace {

struct PanelIntegral {
  double value;
  double error;
};

// Composite 20-point Gauss-Legendre with panels of width <= 0.5, error from halving.
PanelIntegral panel_integral(const std::function<double(double)>& f, double upper) {
  const int panels = std::max(1, static_cast<int>(std::ceil(upper / 0.5)));
  const double coarse = integrate_fixed(f, 0.0, upper, panels, 20);
  const double fine = integrate_fixed(f, 0.0, upper, 2 * panels, 20);
  return {fine, std::abs(fine - coarse)};
}

}  // namespace

ChaosVarianceReport chaos_variance_term(int q, int d, const ChaosCoefficientTable& table,
                                        double z_max) {
  if (d < 2) throw DomainError("chaos_variance_term: degree must exceed 1");
  ChaosVarianceReport report = chaos_variance_limit(q, table, z_max);
  if (q == 0 || q % 2 != 0) return report;
  const int m = table.m();
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const double upper = std::min(sqrt_d * 0.5 * kPi, z_max);
  const double scale = 2.0 * sphere_volume(m) * sphere_volume(m - 1);
  const auto integrand = [&](double z) {
    const double theta = z / sqrt_d;
    return ipow(sqrt_d * std::sin(theta), m - 1) * htilde_at_angle(theta, q, d, table);
  };
  const PanelIntegral result = panel_integral(integrand, upper);
  report.value_finite_d = scale * result.value;
  report.quadrature_error = std::max(report.quadrature_error, scale * result.error);
  return report;
}

ChaosVarianceReport chaos_variance_limit(int q, const ChaosCoefficientTable& table, double z_max) {
  ChaosVarianceReport report;
  report.q = q;
  if (q < 0 || q > table.q_max()) throw DomainError("chaos order outside the table");
  if (q == 0 || q % 2 != 0) return report;
  const int m = table.m();
  const double scale = 2.0 * sphere_volume(m) * sphere_volume(m - 1);
  const auto integrand = [&](double z) { return ipow(z, m - 1) * htilde_limit(z, q, table); };
  const PanelIntegral result = panel_integral(integrand, z_max);
  report.value_limit = scale * result.value;
  report.quadrature_error = scale * result.error;
  return report;
}

}  // namespace kss
