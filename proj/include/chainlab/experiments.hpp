#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainlab/chain.hpp"
#include "chainlab/profiles.hpp"

namespace chainlab {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment {
  Spectrum,
  Localization,
  ClassicalHydro,
  QuantumHydro,
  ConvergenceSweep,
  EulerSolve,
  MonteCarloCheck,
};

const char* experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);  // accepts lowercase too

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run depends on semantically. threads/output_dir/check steer
// execution and reporting but never the computed numbers, so they stay out of
// the canonical serialization and the hash.
struct ExperimentConfig {
  Experiment experiment = Experiment::Spectrum;
  std::vector<int> n_list = {256, 512};
  std::vector<std::uint64_t> seeds;  // explicit list; empty = base + count
  std::uint64_t seed_base = 20260822;
  int seed_count = 16;
  std::vector<double> times = {0.5};
  double horizon = 2.0;
  MassLaw mass_law = MassLaw::uniform(0.8, 1.2);
  MacroProfiles profiles;
  std::vector<Profile> test_functions;
  std::vector<std::string> test_function_names;
  double gamma = 0.2;
  double theta = 0.5;
  double theta_prime = 0.7;
  double alpha = 0.25;
  int mc_samples = 100000;
  std::string output_dir = "out";
  int threads = 1;
  bool check = false;

  std::vector<std::uint64_t> seed_list() const;
  void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config_json(const std::string& text);  // throws ConfigError
std::string canonical_config_json(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash(const ExperimentConfig& config);  // 16 hex digits

struct ReportRow {
  std::string experiment;
  int n = 0;
  std::uint64_t seed = 0;
  double t = 0.0;
  std::string f_name;
  std::string metric;
  double value = 0.0;
  double err = 0.0;  // standard error where an ensemble provides one, else 0
};

struct FitSummary {
  double slope = 0.0;             // least-squares slope, log-log for n-sweeps
  double ratio_first_last = 0.0;  // value at largest n over value at smallest
  double r2 = 0.0;
  bool pass = true;
};

struct ConvergenceReport {
  std::vector<ReportRow> rows;
  std::map<std::string, FitSummary> fits;
  std::vector<std::string> cell_errors;  // failed (n, seed) cells, run continued
  std::string config_hash;
  std::string version;
  std::string config_echo;  // canonical JSON of the effective config

  bool all_pass() const;
};

// Chebyshev-style convergence-in-probability certificate: second_moment/delta^2.
double markov_bound(double second_moment, double delta);

// Executes the configured pipeline over every (n, seed) cell, writes
// report.csv and summary.json (plus experiment-specific CSVs) into
// output_dir when set, and returns the assembled report. Deterministic for a
// fixed config on a fixed build, independent of thread count: cells are
// computed in parallel but reduced in a fixed order.
ConvergenceReport run(const ExperimentConfig& config);

std::string report_csv(const ConvergenceReport& report);
std::string report_json(const ConvergenceReport& report);
void write_report(const ConvergenceReport& report, const std::string& dir);

// Renders the report's plottable metric classes as standalone SVG files in
// dir; returns the paths written. Classes with no rows are skipped and noted
// in *log when provided.
std::vector<std::string> emit_plots(const ConvergenceReport& report, const std::string& dir,
                                    std::string* log = nullptr);

}  // namespace chainlab
