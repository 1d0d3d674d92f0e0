#include "kss/zero_set_volume.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "kss/error.hpp"

namespace kss {

std::string to_string(VolumeMethod method) {
  switch (method) {
    case VolumeMethod::marching:
      return "marching";
    case VolumeMethod::crofton:
      return "crofton";
    case VolumeMethod::count:
      return "count";
  }
  return "unknown";
}

void LevelPolyline::write_csv(std::ostream& out) const {
  out << "segment,x,y,z\n" << std::setprecision(17);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (const Vec3& p : segments[i]) {
      out << i << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
    }
  }
}

double max_edge_for_degree(int d) { return 0.3 / std::sqrt(static_cast<double>(d)); }

int required_mesh_level(int d) {
  const double limit = max_edge_for_degree(d);
  for (int level = 0; level <= kMaxMeshLevel; ++level) {
    if (icosphere_max_edge(level) <= limit) return level;
  }
  return kMaxMeshLevel + 1;
}

namespace {

// Values within this band of zero count as positive.
constexpr double kZeroBand = 1e-13;

bool positive(double v) { return v > -kZeroBand; }

double arc_length(const Vec3& a, const Vec3& b) {
  return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
}

double trace(const KssSystem& sys, const SphericalMesh& mesh, bool newton, LevelPolyline* keep) {
  Evaluator eval(sys);
  const std::size_t nv = mesh.vertices.size();
  const double parity = (sys.d() % 2 == 0) ? 1.0 : -1.0;
  const bool have_antipodes = mesh.antipode.size() == nv;

  std::vector<double> value(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const int a = have_antipodes ? mesh.antipode[i] : -1;
    if (a >= 0 && static_cast<std::size_t>(a) < i) {
      value[i] = parity * value[a];
    } else {
      value[i] = eval.value_first(mesh.vertices[i].data());
    }
  }

  std::unordered_map<std::uint64_t, Vec3> crossings;
  const auto key = [nv](int a, int b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return lo * nv + hi;
  };
  double grad[3];
  const auto crossing = [&](int a, int b) -> const Vec3& {
    auto it = crossings.find(key(a, b));
    if (it != crossings.end()) return it->second;
    const Vec3& pa = mesh.vertices[a];
    const Vec3& pb = mesh.vertices[b];
    const double t = std::clamp(value[a] / (value[a] - value[b]), 0.0, 1.0);
    Vec3 x = (pa + t * (pb - pa)).normalized();
    if (newton) {
      const double y = eval.value_first(x.data());
      eval.gradient_first(x.data(), grad);
      Vec3 g(grad[0], grad[1], grad[2]);
      g -= g.dot(x) * x;
      const double gn2 = g.squaredNorm();
      if (gn2 >= 1e-16) {
        const Vec3 step = (y / gn2) * g;
        // Near-singular points can send the step far off the edge; keep the
        // interpolated point there.
        if (step.norm() <= (pa - pb).norm()) x = (x - step).normalized();
      }
    }
    auto [slot, _] = crossings.emplace(key(a, b), x);
    if (have_antipodes) {
      const int aa = mesh.antipode[a];
      const int ab = mesh.antipode[b];
      if (aa >= 0 && ab >= 0) crossings.emplace(key(aa, ab), -x);
    }
    return slot->second;
  };

  std::vector<double> lengths;
  lengths.reserve(mesh.triangles.size() / 8);
  for (const Triangle& tri : mesh.triangles) {
    const bool s0 = positive(value[tri[0]]);
    const bool s1 = positive(value[tri[1]]);
    const bool s2 = positive(value[tri[2]]);
    if (s0 == s1 && s1 == s2) continue;
    // Exactly two edges change sign.
    std::array<Vec3, 2> seg;
    int found = 0;
    const bool s[3] = {s0, s1, s2};
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      if (s[e] != s[(e + 1) % 3]) seg[found++] = crossing(a, b);
    }
    const double len = arc_length(seg[0], seg[1]);
    lengths.push_back(len);
    if (keep) keep->segments.push_back(seg);
  }
  const double total = pairwise_sum(lengths);
  if (keep) keep->total_length = total;
  return total;
}

}  // namespace

MarchingResult zero_length_marching(const KssSystem& sys, const SphericalMesh& mesh,
                                    const MarchingOptions& options) {
  if (sys.m() != 2 || sys.r() != 1) {
    throw DomainError("zero_length_marching needs a single polynomial on S^2 (m = 2, r = 1)");
  }
  if (options.enforce_resolution && mesh.max_edge > max_edge_for_degree(sys.d())) {
    const int need = required_mesh_level(sys.d());
    throw ResolutionError("mesh level " + std::to_string(mesh.level) + " too coarse for degree " +
                              std::to_string(sys.d()) + "; need level " + std::to_string(need),
                          need);
  }
  MarchingResult result;
  result.estimate.method = VolumeMethod::marching;
  result.estimate.mesh_level = mesh.level;
  result.estimate.value =
      trace(sys, mesh, options.newton, options.keep_polyline ? &result.polyline : nullptr);
  if (options.refinement_error && mesh.level > 0) {
    const double coarse = trace(sys, icosphere(mesh.level - 1), options.newton, nullptr);
    result.estimate.error_estimate = std::abs(result.estimate.value - coarse);
  }
  return result;
}

namespace {

// Number of sign changes of the cubic Hermite interpolant on one cell.
int cubic_sign_changes(double y0, double s0, double y1, double s1, double h) {
  constexpr int samples = 16;
  int changes = 0;
  bool prev = positive(y0);
  for (int i = 1; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double p = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * s0 +
                     (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * s1;
    const bool cur = (i == samples) ? positive(y1) : positive(p);
    if (cur != prev) ++changes;
    prev = cur;
  }
  return changes;
}

double bisect(CircleRestriction& f, double lo, double hi, bool lo_positive) {
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (positive(f.value_and_slope(mid).first) == lo_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

RootScan scan_circle(CircleRestriction& f, int d, const RootScanOptions& options) {
  if (d < 1) throw DomainError("scan_circle: degree must be positive");
  if (options.max_doublings < 0) throw DomainError("scan_circle: max_doublings must be >= 0");
  // Y(phi + pi) = (-1)^d Y(phi): scan the half circle and double.
  const double parity = (d % 2 == 0) ? 1.0 : -1.0;
  int cells = std::max(4, options.points_per_degree * d / 2);
  for (int doubling = 0; doubling <= options.max_doublings; ++doubling, cells *= 2) {
    const double h = kPi / cells;
    std::vector<double> y(cells + 1);
    std::vector<double> s(cells + 1);
    for (int i = 0; i < cells; ++i) std::tie(y[i], s[i]) = f.value_and_slope(i * h);
    y[cells] = parity * y[0];
    s[cells] = parity * s[0];

    const bool last = doubling == options.max_doublings;
    bool ambiguous = false;
    int count = 0;
    std::vector<std::pair<double, double>> brackets;
    for (int i = 0; i < cells && !ambiguous; ++i) {
      const bool grid_change = positive(y[i]) != positive(y[i + 1]);
      const int cubic = cubic_sign_changes(y[i], s[i], y[i + 1], s[i + 1], h);
      if (cubic == (grid_change ? 1 : 0)) {
        if (grid_change) {
          ++count;
          brackets.emplace_back(i * h, (i + 1) * h);
        }
      } else if (!last) {
        ambiguous = true;
      } else {
        // Near-tangent crossing: count sign changes of the field itself on a fine sub-grid.
        constexpr int sub = 64;
        const double step = h / sub;
        bool prev = positive(y[i]);
        for (int k = 1; k <= sub; ++k) {
          const bool cur = k == sub ? positive(y[i + 1]) : positive(f.value_and_slope(i * h + k * step).first);
          if (cur != prev) {
            ++count;
            brackets.emplace_back(i * h + (k - 1) * step, i * h + k * step);
          }
          prev = cur;
        }
      }
    }
    if (ambiguous) continue;

    RootScan scan;
    scan.count = 2 * count;
    scan.doublings = doubling;
    if (options.locate) {
      for (const auto& [lo, hi] : brackets) {
        scan.roots.push_back(bisect(f, lo, hi, positive(f.value_and_slope(lo).first)));
      }
      const std::size_t half = scan.roots.size();
      for (std::size_t k = 0; k < half; ++k) scan.roots.push_back(scan.roots[k] + kPi);
    }
    return scan;
  }
  throw ConsistencyError("scan_circle: unreachable");
}

VolumeEstimate zero_volume_crofton(const KssSystem& sys, int n_circles, Rng& rng,
                                   const RootScanOptions& options) {
  if (sys.m() != 2 || sys.r() != 1) {
    throw DomainError("zero_volume_crofton needs a single polynomial on S^2 (m = 2, r = 1)");
  }
  if (n_circles < 100) throw DomainError("zero_volume_crofton: need at least 100 circles");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> counts(n_circles);
  for (int c = 0; c < n_circles; ++c) {
    // Gram-Schmidt on two Gaussian vectors gives a rotation-invariant great circle.
    Eigen::VectorXd a(3);
    Eigen::VectorXd b(3);
    for (int k = 0; k < 3; ++k) a[k] = normal(rng);
    for (int k = 0; k < 3; ++k) b[k] = normal(rng);
    const SpherePoint u = SpherePoint::normalized(a);
    const SpherePoint v = SpherePoint::normalized(b - b.dot(u.coords()) * u.coords());
    CircleRestriction f(sys, u, v);
    counts[c] = scan_circle(f, sys.d(), options).count;
  }
  const double n = n_circles;
  const double mean = pairwise_sum(counts) / n;
  double ss = 0.0;
  for (double x : counts) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  VolumeEstimate est;
  est.method = VolumeMethod::crofton;
  est.value = kPi * mean;
  est.error_estimate = kPi * sd / std::sqrt(n);
  est.n_circles = n_circles;
  return est;
}

int count_roots_circle(const KssSystem& sys, const RootScanOptions& options) {
  if (sys.m() != 1 || sys.r() != 1) throw DomainError("count_roots_circle needs m = 1, r = 1");
  CircleRestriction f(sys, SpherePoint::basis_vector(1, 0), SpherePoint::basis_vector(1, 1));
  return scan_circle(f, sys.d(), options).count;
}

}  // namespace kss
