#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace kss {

using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

/// Nodes and weights of a Gauss rule. For Legendre the rule lives on [-1,1]
/// with weight 1; for Hermite it integrates against the standard normal
/// density (weights sum to 1).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_legendre(int n);
const GaussRule& gauss_hermite(int n);

/// Controls composite Gauss-Legendre integration with panel doubling.
struct QuadratureSpec {
  int nodes_per_panel = 16;
  int initial_panels = 8;
  double rel_tol = 1e-8;
  int max_refinements = 8;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // |I_2P - I_P| at the accepted refinement
  int evaluations = 0;
};

/// Fixed composite rule: `panels` equal panels of `nodes_per_panel` nodes.
/// Throws IntegrationError on a non-finite integrand value.
double integrate_fixed(const std::function<double(double)>& f, double a, double b, int panels,
                       int nodes_per_panel);

/// Composite Gauss-Legendre, doubling the panel count until the relative change
/// drops below spec.rel_tol (measured against the L1 mass of the integrand so
/// that integrals that cancel to zero still terminate).
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              const QuadratureSpec& spec = {});

/// Volume kappa_m of the unit sphere S^m in R^{m+1}.
double sphere_volume(int m);

double log_factorial(int n);
double factorial(int n);

/// Pairwise (cascade) summation; the result does not depend on threading.
double pairwise_sum(std::span<const double> values);

/// Runs fn(i) for i in [0, n) on `workers` threads. Each index is visited
/// exactly once; callers write into per-index slots so results are independent
/// of the worker count.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Default worker count (hardware concurrency, at least 1).
unsigned default_workers();

/// Fills `out` with independent standard normal draws.
void fill_standard_normal(Rng& rng, std::span<double> out);

}  // namespace kss
