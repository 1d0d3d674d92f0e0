#include "kss/clt_harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "kss/chaos_expansion.hpp"
#include "kss/covariance_kernel.hpp"
#include "kss/error.hpp"
#include "kss/kac_rice_moments.hpp"
#include "kss/local_limit_field.hpp"

namespace kss {

using nlohmann::json;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::mean:
      return "mean";
    case Experiment::varscale:
      return "varscale";
    case Experiment::clt:
      return "clt";
    case Experiment::chaos:
      return "chaos";
    case Experiment::local:
      return "local";
    case Experiment::covdump:
      return "covdump";
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::mean, Experiment::varscale, Experiment::clt, Experiment::chaos,
                       Experiment::local, Experiment::covdump}) {
    if (name == to_string(e)) return e;
  }
  if (name == "variance-scaling") return Experiment::varscale;
  if (name == "covariance-dump") return Experiment::covdump;
  throw DomainError("unknown experiment '" + std::string(name) + "'");
}

VolumeMethod parse_volume_method(std::string_view name) {
  if (name == "marching") return VolumeMethod::marching;
  if (name == "crofton") return VolumeMethod::crofton;
  throw DomainError("unknown method '" + std::string(name) + "' (marching or crofton)");
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw DomainError("unknown format '" + std::string(name) + "' (json or csv)");
}

void ExperimentConfig::validate() const {
  if (m < 1 || r < 1 || r > m) throw DomainError("need 1 <= r <= m");
  const bool volume = experiment == Experiment::mean || experiment == Experiment::varscale ||
                      experiment == Experiment::clt;
  if (volume) {
    const bool curve = m == 2 && r == 1;
    const bool count = m == 1 && r == 1;
    if (!curve && !count) {
      throw DomainError("volume sampling is implemented for (m, r) = (2, 1) and (1, 1)");
    }
    if (count && method == VolumeMethod::crofton) {
      throw DomainError("the Crofton estimator needs m = 2");
    }
    if (experiment == Experiment::varscale && r == m) {
      throw DomainError("variance scaling needs r < m");
    }
  }
  if (volume || experiment == Experiment::covdump) {
    if (degrees.empty()) throw DomainError("empty degree grid");
    for (int d : degrees) {
      if (d < 2) throw DomainError("degrees must be at least 2");
    }
  }
  if ((volume || experiment == Experiment::local) && replicates < 2) {
    throw DomainError("need at least 2 replicates");
  }
  if (experiment == Experiment::clt && replicates < 50) {
    throw DomainError("normality tests need at least 50 replicates");
  }
  if (experiment == Experiment::chaos && (r != 1 || q_max < 0)) {
    throw DomainError("chaos experiment supports r = 1 and q_max >= 0");
  }
  if (experiment == Experiment::local && m != 2) throw DomainError("local experiment needs m = 2");
  if (mesh_level > kMaxMeshLevel) throw DomainError("mesh level above the supported maximum");
  if (n_circles < 100) throw DomainError("need at least 100 Crofton circles");
}

void merge_config_json(ExperimentConfig& c, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  try {
    if (j.contains("experiment")) c.experiment = parse_experiment(j["experiment"].get<std::string>());
    if (j.contains("m")) c.m = j["m"].get<int>();
    if (j.contains("r")) c.r = j["r"].get<int>();
    if (j.contains("d")) c.degrees = {j["d"].get<int>()};
    if (j.contains("d_grid")) c.degrees = j["d_grid"].get<std::vector<int>>();
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("mesh_level")) c.mesh_level = j["mesh_level"].get<int>();
    if (j.contains("method")) c.method = parse_volume_method(j["method"].get<std::string>());
    if (j.contains("n_mc")) c.n_mc = j["n_mc"].get<int>();
    if (j.contains("n_circles")) c.n_circles = j["n_circles"].get<int>();
    if (j.contains("q_max")) c.q_max = j["q_max"].get<int>();
    if (j.contains("grid")) c.grid = j["grid"].get<int>();
    if (j.contains("n_waves")) c.n_waves = j["n_waves"].get<int>();
    if (j.contains("workers")) c.workers = j["workers"].get<unsigned>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("format")) c.format = parse_report_format(j["format"].get<std::string>());
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
}

namespace {

json config_json(const ExperimentConfig& c) {
  // workers and out are left out: they must not change the report bytes.
  return json{{"experiment", to_string(c.experiment)},
              {"m", c.m},
              {"r", c.r},
              {"d_grid", c.degrees},
              {"replicates", c.replicates},
              {"seed", c.seed},
              {"mesh_level", c.mesh_level},
              {"method", to_string(c.method)},
              {"n_mc", c.n_mc},
              {"n_circles", c.n_circles},
              {"q_max", c.q_max},
              {"grid", c.grid},
              {"n_waves", c.n_waves},
              {"format", c.format == ReportFormat::json ? "json" : "csv"}};
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

NormalityStats normality_tests(std::span<const double> sample, double location) {
  const int n = static_cast<int>(sample.size());
  if (n < 50) throw DomainError("normality_tests: need at least 50 values");
  NormalityStats s;
  s.n = n;
  s.mean = pairwise_sum(sample) / n;
  std::vector<double> dev2(n);
  std::vector<double> dev3(n);
  std::vector<double> dev4(n);
  for (int i = 0; i < n; ++i) {
    const double e = sample[i] - s.mean;
    dev2[i] = e * e;
    dev3[i] = dev2[i] * e;
    dev4[i] = dev2[i] * dev2[i];
  }
  const double m2 = pairwise_sum(dev2) / n;
  const double m3 = pairwise_sum(dev3) / n;
  const double m4 = pairwise_sum(dev4) / n;
  if (!(m2 > 0.0) || m2 <= 1e-28 * (1.0 + s.mean * s.mean)) {
    throw DomainError("normality_tests: sample has zero variance");
  }
  s.variance = m2 * n / (n - 1.0);

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(s.variance);
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 0.5 * std::erfc(-(sorted[i] - location) / (sd * std::sqrt(2.0)));
    dmax = std::max({dmax, (i + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  s.ks_statistic = dmax;
  const double rn = std::sqrt(static_cast<double>(n));
  s.ks_pvalue = kolmogorov_tail((rn + 0.12 + 0.11 / rn) * dmax);

  const double nn = n;
  const double g1 = m3 / std::pow(m2, 1.5);
  const double g2 = m4 / (m2 * m2) - 3.0;
  const double ses = std::sqrt(6.0 * nn * (nn - 1.0) / ((nn - 2.0) * (nn + 1.0) * (nn + 3.0)));
  const double sek = 2.0 * ses * std::sqrt((nn * nn - 1.0) / ((nn - 3.0) * (nn + 5.0)));
  s.skewness = g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
  s.excess_kurtosis = ((nn + 1.0) * g2 + 6.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
  s.skewness_z = s.skewness / ses;
  s.kurtosis_z = s.excess_kurtosis / sek;
  return s;
}

TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("two_sample_ks: samples too small");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = x.size();
  const double nb = y.size();
  std::size_t i = 0;
  std::size_t j = 0;
  double dmax = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    dmax = std::max(dmax, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {dmax, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * dmax)};
}

std::uint64_t derive_replicate_seed(std::uint64_t master_seed, std::uint64_t replicate_index) {
  std::uint64_t z = master_seed + (replicate_index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double standardization_scale(int m, int r, int d) {
  if (d < 1) throw DomainError("standardization_scale: degree must be positive");
  return std::pow(static_cast<double>(d), 0.5 * r - 0.25 * m);
}

std::vector<double> standardize(std::span<const double> values, double theoretical_mean, int m,
                                int r, int d) {
  const double scale = standardization_scale(m, r, d);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - theoretical_mean) / scale;
  return out;
}

double sample_volume(const ExperimentConfig& config, int d, std::uint64_t seed,
                     const SphericalMesh* mesh) {
  const KssSystem sys = sample_kss(config.m, d, config.r, seed);
  if (config.m == 1) return count_roots_circle(sys);
  if (config.method == VolumeMethod::crofton) {
    Rng rng(derive_replicate_seed(seed, 0x43726f66ULL));
    return zero_volume_crofton(sys, config.n_circles, rng).value;
  }
  if (mesh == nullptr) throw DomainError("sample_volume: marching needs a mesh");
  return zero_length_marching(sys, *mesh).estimate.value;
}

SampleSummary summarize(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) throw DomainError("summarize: need at least 2 values");
  SampleSummary s;
  s.mean = pairwise_sum(values) / n;
  std::vector<double> d2(values.size());
  std::vector<double> d4(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double e = values[i] - s.mean;
    d2[i] = e * e;
    d4[i] = d2[i] * d2[i];
  }
  const double m2 = pairwise_sum(d2) / n;
  const double m4 = pairwise_sum(d4) / n;
  s.variance = m2 * n / (n - 1.0);
  s.mean_se = std::sqrt(s.variance / n);
  // Var(s^2) ~ (mu4 - (n-3)/(n-1) sigma^4) / n
  s.variance_se = std::sqrt(std::max(0.0, (m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n));
  return s;
}

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

unsigned worker_count(const ExperimentConfig& c) {
  return c.workers == 0 ? default_workers() : c.workers;
}

int mesh_level_for(const ExperimentConfig& c) {
  if (c.m != 2 || c.method != VolumeMethod::marching) return -1;
  const int dmax = *std::max_element(c.degrees.begin(), c.degrees.end());
  const int need = required_mesh_level(dmax);
  if (c.mesh_level < 0) {
    if (need > kMaxMeshLevel) {
      throw ResolutionError("degree " + std::to_string(dmax) + " exceeds the finest mesh", need);
    }
    return need;
  }
  if (c.mesh_level < need) {
    throw ResolutionError("mesh level " + std::to_string(c.mesh_level) + " too coarse for degree " +
                              std::to_string(dmax) + "; minimal level is " + std::to_string(need),
                          need);
  }
  return c.mesh_level;
}

DegreeBlock sample_block(const ExperimentConfig& c, int d, const SphericalMesh* mesh) {
  DegreeBlock block;
  block.d = d;
  block.mesh_level = mesh ? mesh->level : -1;
  block.theoretical_mean = expected_volume(c.m, c.r, d);
  block.scale = standardization_scale(c.m, c.r, d);
  const std::uint64_t stream = derive_replicate_seed(c.seed, static_cast<std::uint64_t>(d) << 32);
  const auto n = static_cast<std::size_t>(c.replicates);
  block.seeds.resize(n);
  block.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) block.seeds[i] = derive_replicate_seed(stream, i);
  parallel_for(n, worker_count(c),
               [&](std::size_t i) { block.values[i] = sample_volume(c, d, block.seeds[i], mesh); });
  block.standardized = standardize(block.values, block.theoretical_mean, c.m, c.r, d);
  block.summary = summarize(block.values);
  return block;
}

void run_volume(const ExperimentConfig& c, ExperimentReport& report) {
  const int level = mesh_level_for(c);
  std::optional<SphericalMesh> mesh;
  if (level >= 0) mesh = icosphere(level);
  for (int d : c.degrees) {
    report.blocks.push_back(sample_block(c, d, mesh ? &*mesh : nullptr));
  }

  if (c.experiment == Experiment::mean) {
    for (const DegreeBlock& b : report.blocks) {
      const double z = (b.summary.mean - b.theoretical_mean) / b.summary.mean_se;
      report.checks.push_back({"mean d=" + std::to_string(b.d), std::abs(z) < 3.0,
                               "sample " + fmt(b.summary.mean) + " vs " + fmt(b.theoretical_mean) +
                                   " (z = " + fmt(z) + ")"});
    }
    return;
  }

  if (c.experiment == Experiment::clt) {
    for (DegreeBlock& b : report.blocks) {
      b.normality = normality_tests(b.standardized, 0.0);
      const NormalityStats& s = *b.normality;
      const bool ok = s.ks_pvalue > 0.01 && std::abs(s.skewness_z) < 3.0 &&
                      std::abs(s.kurtosis_z) < 3.0;
      report.checks.push_back({"normality d=" + std::to_string(b.d), ok,
                               "KS p = " + fmt(s.ks_pvalue) + ", skew z = " + fmt(s.skewness_z) +
                                   ", kurtosis z = " + fmt(s.kurtosis_z)});
    }
    return;
  }

  // Variance scaling: sample variance of the standardized volume against the
  // Kac-Rice quadrature at each degree.
  SecondMomentOptions opts;
  opts.n_mc = c.n_mc;
  opts.seed = c.seed;
  for (DegreeBlock& b : report.blocks) {
    const MomentResult kr = second_moment(c.m, c.r, b.d, opts);
    const double norm = b.scale * b.scale;
    b.kac_rice_variance = kr.variance / norm;
    b.kac_rice_error = (kr.quadrature_error + kr.inner_mc_se) / norm;
    const double sv = b.summary.variance / norm;
    const double se = std::hypot(b.summary.variance_se / norm, *b.kac_rice_error);
    const double z = (sv - *b.kac_rice_variance) / se;
    report.checks.push_back({"variance d=" + std::to_string(b.d), std::abs(z) < 3.0,
                             "sample " + fmt(sv) + " vs Kac-Rice " + fmt(*b.kac_rice_variance) +
                                 " (z = " + fmt(z) + ")"});
  }
  for (std::size_t i = 0; i < report.blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < report.blocks.size(); ++j) {
      const DegreeBlock& a = report.blocks[i];
      const DegreeBlock& b = report.blocks[j];
      const double va = a.summary.variance / (a.scale * a.scale);
      const double vb = b.summary.variance / (b.scale * b.scale);
      const double rel = std::abs(va - vb) / std::max(va, vb);
      report.checks.push_back({"stability d=" + std::to_string(a.d) + "/" + std::to_string(b.d),
                               rel <= 0.2, "relative difference " + fmt(rel)});
    }
  }
  MomentResult lim = limit_variance(c.m, c.r, opts);
  report.reference_variance = lim.variance;
  report.reference_error = lim.quadrature_error;
}

void run_chaos(const ExperimentConfig& c, ExperimentReport& report) {
  const ChaosCoefficientTable table(c.r, c.m, c.q_max);
  SecondMomentOptions opts;
  const MomentResult lim = limit_variance(c.m, c.r, opts);
  report.reference_variance = lim.variance;
  report.reference_error = lim.quadrature_error;

  double sum = 0.0;
  double err = 0.0;
  bool monotone = true;
  for (int q = 0; q <= c.q_max; ++q) {
    const ChaosVarianceReport v = chaos_variance_limit(q, table);
    monotone = monotone && v.value_limit >= -v.quadrature_error;
    sum += v.value_limit;
    err += v.quadrature_error;
    report.chaos.push_back({std::nullopt, q, v.value_limit, sum, err});
  }
  const double tol = err + lim.quadrature_error + 1e-9 * lim.variance;
  report.checks.push_back({"partial sums nondecreasing", monotone, "Q = " + std::to_string(c.q_max)});
  report.checks.push_back({"partial sums below limit variance", sum <= lim.variance + tol,
                           "sum " + fmt(sum) + ", Kac-Rice " + fmt(lim.variance) + ", gap " +
                               fmt(lim.variance - sum)});
}

void run_local(const ExperimentConfig& c, ExperimentReport& report) {
  DegreeBlock block;
  const auto n = static_cast<std::size_t>(c.replicates);
  block.seeds.resize(n);
  block.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) block.seeds[i] = derive_replicate_seed(c.seed, i);
  parallel_for(n, worker_count(c), [&](std::size_t i) {
    Rng rng(block.seeds[i]);
    const RandomWaveField field = sample_field(2, c.n_waves, rng);
    block.values[i] = nodal_length_box(field, c.grid).value;
  });
  const BoxVariance box = limit_variance_box(2, 1);
  block.theoretical_mean = box.mean;
  block.standardized = block.values;
  block.summary = summarize(block.values);
  const SampleSummary& s = block.summary;
  report.blocks.push_back(std::move(block));
  report.reference_variance = box.variance;
  report.reference_error = box.quadrature_error;
  report.integrability = ef_integrability_check(0.5, 2);

  const double zm = (s.mean - box.mean) / s.mean_se;
  report.checks.push_back({"box mean", std::abs(zm) < 3.0,
                           "sample " + fmt(s.mean) + " vs " + fmt(box.mean) + " (z = " + fmt(zm) +
                               ")"});
  const double zv = (s.variance - box.variance) / std::hypot(s.variance_se, box.quadrature_error);
  report.checks.push_back({"box variance", std::abs(zv) < 3.0,
                           "sample " + fmt(s.variance) + " vs " + fmt(box.variance) + " (z = " +
                               fmt(zv) + ")"});
  report.checks.push_back({"integrability", std::isfinite(*report.integrability),
                           "integral " + fmt(*report.integrability)});
}

void run_covdump(const ExperimentConfig& c, ExperimentReport& report) {
  std::ostringstream os;
  bool header = true;
  for (int d : c.degrees) {
    std::vector<double> thetas;
    const int steps = 400;
    for (int i = 1; i < steps; ++i) thetas.push_back(kPi * i / steps);
    std::ostringstream block;
    write_profile_csv(block, d, c.m, thetas);
    std::string text = block.str();
    if (!header) text.erase(0, text.find('\n') + 1);
    header = false;
    os << text;
  }
  report.table_csv = os.str();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  switch (config.experiment) {
    case Experiment::mean:
    case Experiment::varscale:
    case Experiment::clt:
      run_volume(config, report);
      break;
    case Experiment::chaos:
      run_chaos(config, report);
      break;
    case Experiment::local:
      run_local(config, report);
      break;
    case Experiment::covdump:
      run_covdump(config, report);
      break;
  }
  return report;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string report_json(const ExperimentReport& report) {
  json j;
  j["config"] = config_json(report.config);
  json blocks = json::array();
  for (const DegreeBlock& b : report.blocks) {
    json jb{{"d", b.d},
            {"mesh_level", b.mesh_level},
            {"theoretical_mean", b.theoretical_mean},
            {"scale", b.scale},
            {"sample_mean", b.summary.mean},
            {"sample_variance", b.summary.variance},
            {"mean_se", b.summary.mean_se},
            {"variance_se", b.summary.variance_se},
            {"kac_rice_variance", optional_json(b.kac_rice_variance)},
            {"kac_rice_error", optional_json(b.kac_rice_error)},
            {"values", b.values}};
    if (b.normality) {
      const NormalityStats& s = *b.normality;
      jb["normality"] = {{"n", s.n},
                         {"ks_statistic", s.ks_statistic},
                         {"ks_pvalue", s.ks_pvalue},
                         {"skewness", s.skewness},
                         {"skewness_z", s.skewness_z},
                         {"excess_kurtosis", s.excess_kurtosis},
                         {"kurtosis_z", s.kurtosis_z}};
    }
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  json chaos = json::array();
  for (const ChaosRow& row : report.chaos) {
    chaos.push_back({{"d", row.d ? json(*row.d) : json("inf")},
                     {"q", row.q},
                     {"term", row.term},
                     {"partial_sum", row.partial_sum},
                     {"error", row.error}});
  }
  j["chaos"] = std::move(chaos);
  j["reference_variance"] = optional_json(report.reference_variance);
  j["reference_error"] = optional_json(report.reference_error);
  j["integrability"] = optional_json(report.integrability);
  if (!report.table_csv.empty()) j["covariance_csv"] = report.table_csv;
  json checks = json::array();
  for (const Check& c : report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["checks"] = std::move(checks);
  j["passed"] = report.passed();
  return j.dump(2);
}

void write_replicates_csv(const ExperimentReport& report, std::ostream& out) {
  out << std::setprecision(17);
  if (report.config.experiment == Experiment::covdump) {
    out << report.table_csv;
    return;
  }
  if (report.config.experiment == Experiment::chaos) {
    out << "d,q,term,partial_sum,error\n";
    for (const ChaosRow& row : report.chaos) {
      out << (row.d ? std::to_string(*row.d) : "inf") << ',' << row.q << ',' << row.term << ','
          << row.partial_sum << ',' << row.error << '\n';
    }
    return;
  }
  out << "d,replicate,seed,value,standardized\n";
  for (const DegreeBlock& b : report.blocks) {
    for (std::size_t i = 0; i < b.values.size(); ++i) {
      out << b.d << ',' << i << ',' << b.seeds[i] << ',' << b.values[i] << ','
          << b.standardized[i] << '\n';
    }
  }
}

void write_report(const ExperimentReport& report, std::ostream& out) {
  if (report.config.format == ReportFormat::json) {
    out << report_json(report) << '\n';
  } else {
    write_replicates_csv(report, out);
  }
}

}  // namespace kss
