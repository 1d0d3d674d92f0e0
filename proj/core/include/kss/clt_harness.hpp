#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kss/zero_set_volume.hpp"

namespace kss {

enum class Experiment { mean, varscale, clt, chaos, local, covdump };
enum class ReportFormat { json, csv };

std::string to_string(Experiment e);
Experiment parse_experiment(std::string_view name);
VolumeMethod parse_volume_method(std::string_view name);
ReportFormat parse_report_format(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::mean;
  int m = 2;
  int r = 1;
  std::vector<int> degrees{16, 36, 64, 100};
  int replicates = 400;
  std::uint64_t seed = 20240611;
  int mesh_level = -1;  // -1: smallest level allowed for the largest degree
  VolumeMethod method = VolumeMethod::marching;
  int n_mc = 200'000;   // inner Monte Carlo samples for moment quadrature (r > 1)
  int n_circles = 400;  // great circles per replicate for the Crofton estimator
  int q_max = 8;
  int grid = 128;       // marching-squares cells per side (local experiment)
  int n_waves = 256;
  unsigned workers = 0;  // 0: all hardware threads
  std::string out;       // empty: stdout
  ReportFormat format = ReportFormat::json;

  /// Throws DomainError on an inconsistent configuration.
  void validate() const;
};

/// Keys not present in the JSON keep their current values.
void merge_config_json(ExperimentConfig& config, std::string_view json_text);
std::string config_to_json(const ExperimentConfig& config);

struct NormalityStats {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
  double skewness = 0.0;
  double skewness_z = 0.0;
  double excess_kurtosis = 0.0;
  double kurtosis_z = 0.0;
};

/// KS test against N(location, s^2) with s^2 the sample variance, plus
/// skewness and excess-kurtosis z-scores with exact finite-n standard errors.
/// Needs at least 50 values and positive variance.
NormalityStats normality_tests(std::span<const double> sample, double location = 0.0);

struct TwoSampleKs {
  double statistic = 0.0;
  double pvalue = 0.0;
};

TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b);

/// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

/// SplitMix64 in counter mode: distinct indices give distinct seeds.
std::uint64_t derive_replicate_seed(std::uint64_t master_seed, std::uint64_t replicate_index);

/// d^{r/2 - m/4}
double standardization_scale(int m, int r, int d);

/// (v - mean) / scale for every replicate value.
std::vector<double> standardize(std::span<const double> values, double theoretical_mean, int m,
                                int r, int d);

/// One zero-set volume sample for the given replicate seed.
double sample_volume(const ExperimentConfig& config, int d, std::uint64_t seed,
                     const SphericalMesh* mesh);

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
};

SampleSummary summarize(std::span<const double> values);

struct DegreeBlock {
  int d = 0;
  int mesh_level = -1;
  double theoretical_mean = 0.0;
  double scale = 1.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  std::vector<double> standardized;
  SampleSummary summary;
  std::optional<NormalityStats> normality;
  std::optional<double> kac_rice_variance;
  std::optional<double> kac_rice_error;
};

struct ChaosRow {
  std::optional<int> d;  // empty for the d -> infinity limit
  int q = 0;
  double term = 0.0;
  double partial_sum = 0.0;
  double error = 0.0;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<DegreeBlock> blocks;
  std::vector<ChaosRow> chaos;
  std::optional<double> reference_variance;  // Kac-Rice limit or box variance
  std::optional<double> reference_error;
  std::optional<double> integrability;
  std::string table_csv;  // covdump output
  std::vector<Check> checks;

  bool passed() const;
};

/// Deterministic for a fixed configuration, independent of config.workers.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_report(const ExperimentReport& report, std::ostream& out);
std::string report_json(const ExperimentReport& report);
void write_replicates_csv(const ExperimentReport& report, std::ostream& out);

}  // namespace kss
