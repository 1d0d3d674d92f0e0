// Command line front end for the random polynomial experiments.
//
//   kssclt mean --m 2 --r 1 --d 36 --reps 400
//   kssclt clt --d 100 --reps 500 --format csv --out clt.csv
//   kssclt chaos --q-max 8
//
// Exit status: 0 on success, 2 if an experiment check fails, 1 on error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kss/clt_harness.hpp"
#include "kss/error.hpp"

namespace {

struct Flags {
  std::string config_file;
  std::optional<int> m, r, d, reps, mesh_level, n_mc, n_circles, q_max, grid, n_waves;
  std::optional<std::vector<int>> d_grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method, out, format;
  std::optional<unsigned> workers;
  bool quiet = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config_file, "JSON config file; flags override its keys")
      ->check(CLI::ExistingFile);
  cmd.add_option("--m", f.m, "sphere dimension");
  cmd.add_option("--r", f.r, "number of equations");
  cmd.add_option("--d", f.d, "single degree");
  cmd.add_option("--d-grid", f.d_grid, "list of degrees")->delimiter(',');
  cmd.add_option("--reps", f.reps, "replicates per degree");
  cmd.add_option("--seed", f.seed, "master seed");
  cmd.add_option("--mesh-level", f.mesh_level, "icosphere level (default: minimal admissible)");
  cmd.add_option("--method", f.method, "marching or crofton");
  cmd.add_option("--n-mc", f.n_mc, "inner Monte Carlo samples for moment quadrature");
  cmd.add_option("--n-circles", f.n_circles, "great circles per Crofton estimate");
  cmd.add_option("--q-max", f.q_max, "highest chaos order");
  cmd.add_option("--grid", f.grid, "marching-squares cells per side");
  cmd.add_option("--n-waves", f.n_waves, "plane waves per limit-field sample");
  cmd.add_option("--workers", f.workers, "worker threads (0: all)");
  cmd.add_option("--out", f.out, "output file (default stdout)");
  cmd.add_option("--format", f.format, "json or csv");
  cmd.add_flag("--quiet", f.quiet, "suppress the check summary on stderr");
}

kss::ExperimentConfig build_config(kss::Experiment experiment, const Flags& f) {
  kss::ExperimentConfig c;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    std::stringstream text;
    text << in.rdbuf();
    kss::merge_config_json(c, text.str());
  }
  c.experiment = experiment;
  if (f.m) c.m = *f.m;
  if (f.r) c.r = *f.r;
  if (f.d) c.degrees = {*f.d};
  if (f.d_grid) c.degrees = *f.d_grid;
  if (f.reps) c.replicates = *f.reps;
  if (f.seed) c.seed = *f.seed;
  if (f.mesh_level) c.mesh_level = *f.mesh_level;
  if (f.method) c.method = kss::parse_volume_method(*f.method);
  if (f.n_mc) c.n_mc = *f.n_mc;
  if (f.n_circles) c.n_circles = *f.n_circles;
  if (f.q_max) c.q_max = *f.q_max;
  if (f.grid) c.grid = *f.grid;
  if (f.n_waves) c.n_waves = *f.n_waves;
  if (f.workers) c.workers = *f.workers;
  if (f.out) c.out = *f.out;
  if (f.format) c.format = kss::parse_report_format(*f.format);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero sets of random homogeneous polynomial systems"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"mean", "sample mean of the zero-set volume"},
      {"varscale", "variance of the standardized volume across degrees"},
      {"clt", "normality of the standardized volume"},
      {"chaos", "chaos decomposition of the limit variance"},
      {"local", "nodal length of the limit field on the unit box"},
      {"covdump", "covariance profile table"},
  };
  for (const auto& [name, help] : commands) add_flags(*app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const kss::ExperimentConfig config =
        build_config(kss::parse_experiment(sub->get_name()), flags);
    const kss::ExperimentReport report = kss::run_experiment(config);
    if (config.out.empty()) {
      kss::write_report(report, std::cout);
    } else {
      std::ofstream out(config.out);
      if (!out) throw kss::Error("cannot open " + config.out);
      kss::write_report(report, out);
    }
    if (!flags.quiet) {
      for (const kss::Check& c : report.checks) {
        std::cerr << (c.passed ? "ok   " : "FAIL ") << c.name << ": " << c.detail << '\n';
      }
    }
    return report.passed() ? 0 : 2;
  } catch (const kss::ResolutionError& e) {
    std::cerr << "error: " << e.what() << " (minimal mesh level " << e.required_level() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
