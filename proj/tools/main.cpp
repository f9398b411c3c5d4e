#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chainlab/experiments.hpp"

namespace {

std::string camel_alias(const std::string& snake) {
  std::string out;
  bool up = true;
  for (char c : snake) {
    if (c == '_') {
      up = true;
    } else {
      out += up ? char(std::toupper(static_cast<unsigned char>(c))) : c;
      up = false;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace chainlab;

  CLI::App app{"numerical laboratory for the disordered harmonic chain"};
  app.set_version_flag("--version", std::string("chainlab ") + kVersion);
  app.require_subcommand(0, 1);

  std::string config_path, out_dir;
  int threads = 1, seed_count = 0;
  std::uint64_t seed_base = 0;
  std::vector<int> n_list;
  std::vector<double> times;
  bool check = false, plots = true;

  auto* config_opt = app.add_option("--config", config_path, "JSON config file");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads");
  auto* seed_base_opt = app.add_option("--seed-base", seed_base, "first disorder seed");
  auto* seed_count_opt = app.add_option("--seed-count", seed_count, "number of disorder seeds");
  auto* n_opt = app.add_option("--n", n_list, "chain sizes, comma separated")->delimiter(',');
  auto* t_opt = app.add_option("--t", times, "macroscopic times, comma separated")->delimiter(',');
  app.add_flag("--check", check, "exit 3 unless every summary fit passes");
  app.add_flag("--plots,!--no-plots", plots, "render SVG plots into the output directory");

  static const Experiment kAll[] = {
      Experiment::Spectrum,       Experiment::Localization,   Experiment::ClassicalHydro,
      Experiment::QuantumHydro,   Experiment::ConvergenceSweep, Experiment::EulerSolve,
      Experiment::MonteCarloCheck};
  static const char* kDescriptions[] = {
      "mode frequencies and degeneracy diagnostics per chain",
      "high-mode correlator decay and frequency-floor scan",
      "locally Gibbs classical states against the wave equation",
      "quasi-free quantum states against the wave equation",
      "classical hydrodynamic sweep with pass/fail convergence fits",
      "macroscopic wave fields written as CSV snapshots",
      "sampled moments of the evolved Gaussian state against closed forms"};
  for (std::size_t i = 0; i < std::size(kAll); ++i) {
    std::string name = experiment_name(kAll[i]);
    auto* sub = app.add_subcommand(name, kDescriptions[i]);
    sub->alias(camel_alias(name));
    sub->fallthrough();
  }

  if (argc <= 1) {
    std::cout << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    nlohmann::json j = nlohmann::json::object();
    if (config_opt->count() > 0) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("cannot open config file '" + config_path + "'");
      std::stringstream ss;
      ss << is.rdbuf();
      try {
        j = nlohmann::json::parse(ss.str());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    }
    bool have_experiment = j.contains("experiment");
    for (const CLI::App* sub : app.get_subcommands()) {
      j["experiment"] = sub->get_name();
      have_experiment = true;
    }
    if (!have_experiment) {
      throw ConfigError("choose an experiment subcommand or set one in the config file");
    }
    if (n_opt->count() > 0) j["n_list"] = n_list;
    if (t_opt->count() > 0) j["times"] = times;
    if (seed_base_opt->count() > 0) {
      j["seed_base"] = seed_base;
      j.erase("seeds");
    }
    if (seed_count_opt->count() > 0) {
      j["seed_count"] = seed_count;
      j.erase("seeds");
    }
    if (out_opt->count() > 0) j["output_dir"] = out_dir;
    if (threads_opt->count() > 0) j["threads"] = threads;
    if (check) j["check"] = true;

    ExperimentConfig cfg = parse_config_json(j.dump());
    ConvergenceReport rep = run(cfg);

    std::cout << "experiment " << experiment_name(cfg.experiment) << "  config " << rep.config_hash
              << "  rows " << rep.rows.size() << "\n";
    std::cout << nlohmann::json::parse(rep.config_echo).dump(2) << "\n";
    for (const auto& [key, fit] : rep.fits) {
      std::printf("fit %-40s slope % .4f  ratio %.4g  r2 %.4f  %s\n", key.c_str(), fit.slope,
                  fit.ratio_first_last, fit.r2, fit.pass ? "pass" : "FAIL");
    }
    if (!cfg.output_dir.empty()) {
      std::cout << "wrote " << cfg.output_dir << "/report.csv and summary.json\n";
      if (plots) {
        std::string plot_log;
        for (const auto& path : emit_plots(rep, cfg.output_dir, &plot_log)) {
          std::cout << "wrote " << path << "\n";
        }
        if (!plot_log.empty()) std::cout << plot_log;
      }
    }
    for (const auto& err : rep.cell_errors) std::cerr << "cell failed: " << err << "\n";
    if (!rep.cell_errors.empty()) return 2;
    if (cfg.check && !rep.all_pass()) {
      std::cerr << "one or more summary fits failed\n";
      return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
