#include "kss/kss_polynomial.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"
#include "kss/error.hpp"

namespace kss {
namespace {

std::size_t binomial_checked(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // c * (n - k + i) / i stays integral at every step.
    std::size_t next = 0;
    if (__builtin_mul_overflow(c, n - k + i, &next)) {
      throw DomainError("multi-index count overflows size_t");
    }
    c = next / i;
  }
  return c;
}

void check_dims(int m, int d) {
  if (m < 1) throw DomainError("dimension m must be at least 1");
  if (d < 0) throw DomainError("degree must be nonnegative");
}

}  // namespace

std::size_t multi_index_count(int m, int d) {
  check_dims(m, d);
  return binomial_checked(static_cast<std::size_t>(d) + m, static_cast<std::size_t>(m));
}

std::vector<MultiIndex> enumerate_multi_indices(int m, int d) {
  const std::size_t count = multi_index_count(m, d);
  std::vector<MultiIndex> out;
  out.reserve(count);
  MultiIndex j(m + 1, 0);
  j[0] = d;
  while (true) {
    out.push_back(j);
    // Next in order: find the rightmost position k < m with j_k > 0, move one
    // unit from it to position k+1 and sweep everything after k+1 into k+1.
    int k = m - 1;
    while (k >= 0 && j[k] == 0) --k;
    if (k < 0) break;
    --j[k];
    int tail = 1;
    for (int i = k + 1; i <= m; ++i) {
      tail += j[i];
      j[i] = 0;
    }
    j[k + 1] = tail;
  }
  return out;
}

std::size_t multi_index_position(std::span<const int> j) {
  const int m = static_cast<int>(j.size()) - 1;
  if (m < 1) throw DomainError("multi-index needs at least two entries");
  int remaining = 0;
  for (int x : j) {
    if (x < 0) throw DomainError("negative multi-index entry");
    remaining += x;
  }
  std::size_t pos = 0;
  for (int k = 0; k < m; ++k) {
    // Indices sharing j_0..j_{k-1} but with a larger j_k come first.
    if (j[k] < remaining) {
      pos += binomial_checked(static_cast<std::size_t>(remaining - j[k] - 1 + m - k),
                              static_cast<std::size_t>(m - k));
    }
    remaining -= j[k];
  }
  return pos;
}

MonomialBasis::MonomialBasis(int m, int d) : m_(m), d_(d), size_(multi_index_count(m, d)) {}

void MonomialBasis::fill(const double* t, double* out, double* powers) const {
  const int stride = d_ + 1;
  for (int k = 0; k <= m_; ++k) {
    double* p = powers + k * stride;
    p[0] = 1.0;
    for (int e = 1; e <= d_; ++e) p[e] = p[e - 1] * t[k];
  }
  double* cursor = out;
  sweep(0, d_, 1.0, powers, cursor);
}

void MonomialBasis::sweep(int level, int remaining, double prefix, const double* powers,
                          double*& out) const {
  const int stride = d_ + 1;
  const double* p = powers + level * stride;
  if (level == m_ - 1) {
    const double* last = powers + m_ * stride;
    for (int j = remaining; j >= 0; --j) *out++ = prefix * p[j] * last[remaining - j];
    return;
  }
  for (int j = remaining; j >= 0; --j) sweep(level + 1, remaining - j, prefix * p[j], powers, out);
}

KssSystem::KssSystem(int m, int d, std::uint64_t seed, Eigen::MatrixXd coeffs)
    : m_(m),
      d_(d),
      seed_(seed),
      coeffs_(std::move(coeffs)),
      basis_(m, d),
      dbasis_(m, std::max(d - 1, 0)) {
  if (d < 1) throw DomainError("degree must be at least 1");
  if (coeffs_.rows() < 1 || coeffs_.rows() > m) {
    throw DomainError("number of equations r must satisfy 1 <= r <= m");
  }
  if (static_cast<std::size_t>(coeffs_.cols()) != basis_.size()) {
    throw DomainError("coefficient array has " + std::to_string(coeffs_.cols()) +
                      " columns, expected " + std::to_string(basis_.size()));
  }
  if (!coeffs_.allFinite()) throw DomainError("non-finite coefficient");

  // dY/dt_k has coefficient (i_k + 1) a_{i + e_k} at degree d-1 index i.
  const auto lower = enumerate_multi_indices(m, d - 1);
  dcoeffs_.assign(m + 1, Eigen::MatrixXd::Zero(coeffs_.rows(), static_cast<Eigen::Index>(lower.size())));
  for (int k = 0; k <= m; ++k) {
    for (std::size_t i = 0; i < lower.size(); ++i) {
      MultiIndex up = lower[i];
      ++up[k];
      const auto src = static_cast<Eigen::Index>(multi_index_position(up));
      dcoeffs_[k].col(static_cast<Eigen::Index>(i)) = up[k] * coeffs_.col(src);
    }
  }
}

KssSystem KssSystem::from_terms(int m, int d,
                                const std::vector<std::pair<MultiIndex, double>>& terms) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(multi_index_count(m, d)));
  for (const auto& [j, value] : terms) {
    if (static_cast<int>(j.size()) != m + 1) throw DomainError("term has wrong arity");
    int weight = 0;
    for (int x : j) weight += x;
    if (weight != d) throw DomainError("term weight differs from the degree");
    c(0, static_cast<Eigen::Index>(multi_index_position(j))) += value;
  }
  return KssSystem(m, d, 0, std::move(c));
}

double kss_coefficient_scale(std::span<const int> j) {
  int d = 0;
  double log_var = 0.0;
  for (int x : j) {
    d += x;
    log_var -= log_factorial(x);
  }
  log_var += log_factorial(d);
  const double log_sd = 0.5 * log_var;
  if (log_sd > std::log(std::numeric_limits<double>::max())) {
    throw DomainError("coefficient variance overflows double");
  }
  return std::exp(log_sd);
}

KssSystem sample_kss(int m, int d, int r, std::uint64_t seed) {
  if (d < 2) throw DomainError("sample_kss: degree must exceed 1");
  if (r < 1 || r > m) throw DomainError("sample_kss: need 1 <= r <= m");
  const auto indices = enumerate_multi_indices(m, d);
  std::vector<double> scale(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) scale[i] = kss_coefficient_scale(indices[i]);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd c(r, static_cast<Eigen::Index>(indices.size()));
  for (int l = 0; l < r; ++l) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      c(l, static_cast<Eigen::Index>(i)) = scale[i] * normal(rng);
    }
  }
  return KssSystem(m, d, seed, std::move(c));
}

Evaluator::Evaluator(const KssSystem& sys)
    : sys_(&sys),
      mono_(static_cast<Eigen::Index>(sys.basis().size())),
      dmono_(static_cast<Eigen::Index>(sys.derivative_basis().size())),
      powers_(static_cast<std::size_t>(sys.m() + 1) * (sys.d() + 1)) {}

void Evaluator::check(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  if (t.size() != sys_->m() + 1) throw DomainError("point has wrong dimension");
  if (!t.allFinite()) throw DomainError("non-finite evaluation point");
}

Eigen::VectorXd Evaluator::value(const Eigen::Ref<const Eigen::VectorXd>& t) {
  check(t);
  sys_->basis().fill(t.data(), mono_.data(), powers_.data());
  return sys_->coeffs() * mono_;
}

double Evaluator::value_first(const double* t) {
  sys_->basis().fill(t, mono_.data(), powers_.data());
  return sys_->coeffs().row(0).dot(mono_);
}

Eigen::MatrixXd Evaluator::gradient(const Eigen::Ref<const Eigen::VectorXd>& t) {
  check(t);
  sys_->derivative_basis().fill(t.data(), dmono_.data(), powers_.data());
  const int m = sys_->m();
  Eigen::MatrixXd g(sys_->r(), m + 1);
  for (int k = 0; k <= m; ++k) g.col(k) = sys_->derivative_coeffs()[k] * dmono_;
  return g;
}

void Evaluator::gradient_first(const double* t, double* out) {
  sys_->derivative_basis().fill(t, dmono_.data(), powers_.data());
  for (int k = 0; k <= sys_->m(); ++k) out[k] = sys_->derivative_coeffs()[k].row(0).dot(dmono_);
}

Eigen::VectorXd evaluate(const KssSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& t) {
  Evaluator e(sys);
  return e.value(t);
}

JetEvaluation jet_on_sphere(const KssSystem& sys, const SpherePoint& t, const TangentFrame& frame) {
  if (t.dim() != sys.m()) throw DomainError("jet_on_sphere: point dimension differs from system");
  if ((frame.base.coords() - t.coords()).norm() > 1e-12) {
    throw DomainError("jet_on_sphere: frame is based at a different point");
  }
  if (static_cast<int>(frame.basis.size()) != sys.m()) {
    throw DomainError("jet_on_sphere: frame must have m vectors");
  }
  for (const auto& b : frame.basis) {
    if (b.size() != t.coords().size() || std::abs(b.dot(t.coords())) > 1e-10) {
      throw DomainError("jet_on_sphere: frame vector not tangent at the point");
    }
  }
  Evaluator e(sys);
  JetEvaluation jet;
  jet.y = e.value(t.coords());
  const Eigen::MatrixXd g = e.gradient(t.coords());
  jet.ybar_prime.resize(sys.r(), sys.m());
  const double inv = 1.0 / std::sqrt(static_cast<double>(sys.d()));
  for (int k = 0; k < sys.m(); ++k) jet.ybar_prime.col(k) = inv * (g * frame.basis[k]);
  return jet;
}

CircleRestriction::CircleRestriction(const KssSystem& sys, const SpherePoint& u,
                                     const SpherePoint& v)
    : eval_(sys), u_(u.coords()), v_(v.coords()), point_(u.coords().size()),
      grad_(u.coords().size()) {
  if (u.dim() != sys.m() || v.dim() != sys.m()) {
    throw DomainError("restrict_to_circle: dimension mismatch");
  }
  if (std::abs(u_.dot(v_)) > 1e-10) throw DomainError("restrict_to_circle: u and v not orthogonal");
}

Eigen::VectorXd CircleRestriction::operator()(double phi) {
  point_ = std::cos(phi) * u_ + std::sin(phi) * v_;
  return eval_.value(point_);
}

std::pair<double, double> CircleRestriction::value_and_slope(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  point_ = c * u_ + s * v_;
  const double y = eval_.value_first(point_.data());
  eval_.gradient_first(point_.data(), grad_.data());
  double slope = 0.0;
  for (Eigen::Index k = 0; k < point_.size(); ++k) slope += grad_[k] * (-s * u_[k] + c * v_[k]);
  return {y, slope};
}

CircleRestriction restrict_to_circle(const KssSystem& sys, const SpherePoint& u,
                                     const SpherePoint& v) {
  return CircleRestriction(sys, u, v);
}

std::string to_json(const KssSystem& sys) {
  nlohmann::json j;
  j["m"] = sys.m();
  j["d"] = sys.d();
  j["r"] = sys.r();
  j["seed"] = sys.seed();
  auto rows = nlohmann::json::array();
  for (int l = 0; l < sys.r(); ++l) {
    std::vector<double> row(sys.coeffs().cols());
    for (Eigen::Index i = 0; i < sys.coeffs().cols(); ++i) row[i] = sys.coeffs()(l, i);
    rows.push_back(row);
  }
  j["coeffs"] = rows;
  return j.dump();
}

KssSystem kss_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("invalid system JSON: ") + e.what());
  }
  try {
    const int m = j.at("m").get<int>();
    const int d = j.at("d").get<int>();
    const int r = j.at("r").get<int>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    const auto rows = j.at("coeffs").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != r) throw DomainError("coeffs row count differs from r");
    Eigen::MatrixXd c(r, rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (int l = 0; l < r; ++l) {
      if (static_cast<Eigen::Index>(rows[l].size()) != c.cols()) {
        throw DomainError("ragged coefficient rows");
      }
      for (Eigen::Index i = 0; i < c.cols(); ++i) c(l, i) = rows[l][i];
    }
    return KssSystem(m, d, seed, std::move(c));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed system JSON: ") + e.what());
  }
}

}  // namespace kss
