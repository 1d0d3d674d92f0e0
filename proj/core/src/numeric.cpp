#include "kss/numeric.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "kss/error.hpp"

namespace kss {
namespace {

GaussRule build_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite recurrence.
GaussRule build_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
    jacobi(i - 1, i) = jacobi(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = v * v;
  }
  // Symmetrize to remove eigensolver round-off.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

template <class Builder>
const GaussRule& cached_rule(std::map<int, std::unique_ptr<GaussRule>>& cache, std::mutex& mutex,
                             int n, Builder build) {
  if (n < 1) throw DomainError("quadrature rule needs at least one node");
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(build(n));
  return *slot;
}

struct PanelSums {
  double value;
  double mass;
};

PanelSums panel_sum(const std::function<double(double)>& f, double a, double b, int panels,
                    int nodes_per_panel) {
  const GaussRule& rule = gauss_legendre(nodes_per_panel);
  const double width = (b - a) / panels;
  std::vector<double> terms;
  std::vector<double> abs_terms;
  terms.reserve(static_cast<std::size_t>(panels) * nodes_per_panel);
  abs_terms.reserve(terms.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    for (int i = 0; i < nodes_per_panel; ++i) {
      const double x = mid + 0.5 * width * rule.nodes[i];
      const double fx = f(x);
      if (!std::isfinite(fx)) {
        throw IntegrationError("non-finite integrand value at x = " + std::to_string(x));
      }
      const double w = 0.5 * width * rule.weights[i];
      terms.push_back(w * fx);
      abs_terms.push_back(std::abs(w * fx));
    }
  }
  return {pairwise_sum(terms), pairwise_sum(abs_terms)};
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  static std::mutex mutex;
  return cached_rule(cache, mutex, n, build_legendre);
}

const GaussRule& gauss_hermite(int n) {
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  static std::mutex mutex;
  return cached_rule(cache, mutex, n, build_hermite);
}

double integrate_fixed(const std::function<double(double)>& f, double a, double b, int panels,
                       int nodes_per_panel) {
  if (panels < 1) throw DomainError("integrate_fixed: panels must be positive");
  return panel_sum(f, a, b, panels, nodes_per_panel).value;
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              const QuadratureSpec& spec) {
  int panels = std::max(1, spec.initial_panels);
  PanelSums coarse = panel_sum(f, a, b, panels, spec.nodes_per_panel);
  int evaluations = panels * spec.nodes_per_panel;
  for (int level = 0; level < spec.max_refinements; ++level) {
    panels *= 2;
    const PanelSums fine = panel_sum(f, a, b, panels, spec.nodes_per_panel);
    evaluations += panels * spec.nodes_per_panel;
    const double change = std::abs(fine.value - coarse.value);
    const double scale = std::max(fine.mass, 1e-300);
    if (change <= spec.rel_tol * scale || fine.mass == 0.0) {
      return {fine.value, change, evaluations};
    }
    coarse = fine;
  }
  throw IntegrationError("adaptive quadrature did not reach relative tolerance " +
                         std::to_string(spec.rel_tol) + " after " +
                         std::to_string(spec.max_refinements) + " refinements");
}

double sphere_volume(int m) {
  if (m < 0) throw DomainError("sphere_volume: negative dimension");
  return 2.0 * std::pow(kPi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

double log_factorial(int n) {
  if (n < 0) throw DomainError("log_factorial: negative argument");
  return std::lgamma(n + 1.0);
}

double factorial(int n) {
  if (n < 0) throw DomainError("factorial: negative argument");
  double result = 1.0;
  for (int k = 2; k <= n; ++k) result *= k;
  return result;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 32;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

unsigned default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void fill_standard_normal(Rng& rng, std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);
}

}  // namespace kss
