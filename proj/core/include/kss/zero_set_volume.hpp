#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "kss/kss_polynomial.hpp"
#include "kss/numeric.hpp"
#include "kss/sphere_geometry.hpp"

namespace kss {

enum class VolumeMethod { marching, crofton, count };

std::string to_string(VolumeMethod method);

struct VolumeEstimate {
  double value = 0.0;
  VolumeMethod method = VolumeMethod::marching;
  double error_estimate = 0.0;  // refinement delta or Monte Carlo standard error
  int mesh_level = -1;
  int n_circles = 0;
};

struct LevelPolyline {
  std::vector<std::array<Vec3, 2>> segments;
  double total_length = 0.0;

  void write_csv(std::ostream& out) const;
};

/// Grid spacing rule for curve tracing: the largest admissible mesh edge at degree d.
double max_edge_for_degree(int d);

/// Smallest icosphere level whose edges satisfy max_edge_for_degree(d).
/// Returns kMaxMeshLevel + 1 if no supported level is fine enough.
int required_mesh_level(int d);

struct MarchingOptions {
  bool newton = true;
  bool keep_polyline = false;
  /// Also trace on icosphere(level - 1) and report |L - L_coarse| as the error.
  bool refinement_error = false;
  /// Skip the resolution rule (used for deliberately coarse studies).
  bool enforce_resolution = true;
};

struct MarchingResult {
  VolumeEstimate estimate;
  LevelPolyline polyline;
};

/// Length of {Y = 0} on S^2 for a single polynomial (r = 1, m = 2) by marching
/// triangles with linear edge interpolation and one Newton step per crossing.
MarchingResult zero_length_marching(const KssSystem& sys, const SphericalMesh& mesh,
                                    const MarchingOptions& options = {});

struct RootScanOptions {
  int points_per_degree = 8;  // grid points on the full circle per unit degree
  int max_doublings = 3;
  bool locate = false;  // bisection to 1e-12 for the root positions
};

struct RootScan {
  int count = 0;
  std::vector<double> roots;  // in [0, 2 pi) if located
  int doublings = 0;
};

/// Zeros of phi -> Y(cos phi u + sin phi v) on [0, 2 pi) for a single polynomial.
RootScan scan_circle(CircleRestriction& restriction, int d, const RootScanOptions& options = {});

/// Crofton estimate pi * E[#(Z(Y) cap random great circle)] for r = 1, m = 2.
VolumeEstimate zero_volume_crofton(const KssSystem& sys, int n_circles, Rng& rng,
                                   const RootScanOptions& options = {});

/// Number of zeros of a single polynomial on S^1 (m = 1).
int count_roots_circle(const KssSystem& sys, const RootScanOptions& options = {4, 3, false});

}  // namespace kss
