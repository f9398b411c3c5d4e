#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "chainlab/chain.hpp"
#include "chainlab/classical_state.hpp"
#include "chainlab/dynamics.hpp"
#include "chainlab/euler_macro.hpp"
#include "chainlab/experiments.hpp"
#include "chainlab/localization.hpp"
#include "chainlab/profiles.hpp"
#include "chainlab/quantum_state.hpp"
#include "chainlab/rng.hpp"
#include "chainlab/spectral.hpp"

namespace py = pybind11;
using namespace chainlab;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Disordered harmonic chain laboratory";
  m.attr("__version__") = kVersion;

  // ------------------------------------------------------------- randomness

  py::class_<StreamRng>(m, "StreamRng")
      .def(py::init<std::uint64_t, std::uint64_t, std::uint64_t>(), py::arg("seed"),
           py::arg("stream") = 0, py::arg("replica") = 0)
      .def("next_u64", &StreamRng::next_u64)
      .def("uniform", py::overload_cast<>(&StreamRng::uniform))
      .def("uniform", py::overload_cast<double, double>(&StreamRng::uniform), py::arg("a"),
           py::arg("b"))
      .def("normal", &StreamRng::normal)
      .def("beta22", &StreamRng::beta22);

  // ---------------------------------------------------------------- profiles

  py::class_<Profile>(m, "Profile")
      .def_static("zero", &Profile::zero)
      .def_static("constant", &Profile::constant, py::arg("c"))
      .def_static("linear", &Profile::linear, py::arg("at0"), py::arg("at1"))
      .def_static("cosine", &Profile::cosine, py::arg("amp"), py::arg("j") = 1)
      .def_static("sine", &Profile::sine, py::arg("amp"), py::arg("j") = 1)
      .def_static("bump", &Profile::bump, py::arg("amp"))
      .def_static("tabulated", &Profile::tabulated, py::arg("values"))
      .def_static("from_name", &Profile::from_name, py::arg("preset"), py::arg("a") = 0.0,
                  py::arg("b") = 0.0, py::arg("j") = 1)
      .def("__call__", &Profile::operator(), py::arg("y"))
      .def("name", &Profile::name)
      .def("min_on_grid", &Profile::min_on_grid, py::arg("pts") = 4096)
      .def("max_on_grid", &Profile::max_on_grid, py::arg("pts") = 4096);

  py::class_<MacroProfiles>(m, "MacroProfiles")
      .def(py::init<>())
      .def_static("equilibrium", &MacroProfiles::equilibrium, py::arg("beta_value") = 1.0)
      .def_readwrite("beta", &MacroProfiles::beta)
      .def_readwrite("pbar", &MacroProfiles::pbar)
      .def_readwrite("rbar", &MacroProfiles::rbar)
      .def("beta_min", &MacroProfiles::beta_min)
      .def("beta_max", &MacroProfiles::beta_max)
      .def("validate", &MacroProfiles::validate, py::arg("quantum") = false);

  m.def("integrate", &integrate, py::arg("f"), py::arg("tol") = 1e-10);

  // ------------------------------------------------------------------ chains

  py::class_<MassLaw>(m, "MassLaw")
      .def_static("beta22", &MassLaw::beta22, py::arg("lo") = 1.0, py::arg("hi") = 2.0)
      .def_static("uniform", &MassLaw::uniform, py::arg("lo"), py::arg("hi"))
      .def_static("constant", &MassLaw::constant, py::arg("m"))
      .def_readonly("m_minus", &MassLaw::m_minus)
      .def_readonly("m_plus", &MassLaw::m_plus)
      .def("mean", &MassLaw::mean)
      .def("name", &MassLaw::name);

  py::class_<DisorderedChain>(m, "DisorderedChain")
      .def_readonly("n", &DisorderedChain::n)
      .def_readonly("seed", &DisorderedChain::seed)
      .def_readonly("mass", &DisorderedChain::mass)
      .def_readonly("mean_mass", &DisorderedChain::mean_mass);

  py::class_<TridiagSym>(m, "TridiagSym")
      .def_readonly("diag", &TridiagSym::diag)
      .def_readonly("off", &TridiagSym::off)
      .def("dense", &TridiagSym::dense)
      .def("apply", &TridiagSym::apply)
      .def("max_abs", &TridiagSym::max_abs);

  m.def("sample_masses", &sample_masses, py::arg("n"), py::arg("law"), py::arg("seed"));
  m.def("build_ap", &build_ap, py::arg("chain"));
  m.def("build_ar", &build_ar, py::arg("chain"));

  // ---------------------------------------------------------------- spectral

  py::class_<EigResult>(m, "EigResult")
      .def_readonly("lambda_", &EigResult::lambda)
      .def_readonly("vectors", &EigResult::vectors);
  m.def("eig_sym_tridiag", &eig_sym_tridiag, py::arg("a"));

  py::class_<SpectralData>(m, "SpectralData")
      .def_readonly("n", &SpectralData::n)
      .def_readonly("omega", &SpectralData::omega)
      .def_readonly("phi_p", &SpectralData::phi_p)
      .def_readonly("phi_p_tilde", &SpectralData::phi_p_tilde)
      .def_readonly("phi_r", &SpectralData::phi_r)
      .def_readonly("near_degenerate", &SpectralData::near_degenerate);

  m.def("build_spectral", &build_spectral, py::arg("chain"));
  m.def("mode_transform", &mode_transform, py::arg("r"), py::arg("p"), py::arg("spec"));
  m.def("inverse_mode_transform", &inverse_mode_transform, py::arg("rhat"), py::arg("phat"),
        py::arg("spec"));

  // ------------------------------------------------------------------ states

  py::enum_<StateFlavor>(m, "StateFlavor")
      .value("Classical", StateFlavor::Classical)
      .value("QuantumQuasiFree", StateFlavor::QuantumQuasiFree);

  py::class_<GaussianChainState>(m, "GaussianChainState")
      .def_readonly("flavor", &GaussianChainState::flavor)
      .def_readonly("mean_r", &GaussianChainState::mean_r)
      .def_readonly("mean_p", &GaussianChainState::mean_p)
      .def_readonly("c_rr", &GaussianChainState::c_rr)
      .def_readonly("c_pp", &GaussianChainState::c_pp)
      .def_readonly("c_rp_re", &GaussianChainState::c_rp_re)
      .def_readonly("c_rp_im", &GaussianChainState::c_rp_im)
      .def("n", &GaussianChainState::n)
      .def("validate", &GaussianChainState::validate);

  m.def("local_gibbs_moments", &local_gibbs_moments, py::arg("chain"), py::arg("profiles"));
  m.def("sample_state", &sample_state, py::arg("state"), py::arg("rng"));

  // ---------------------------------------------------------------- dynamics

  py::class_<EvolutionMap>(m, "EvolutionMap")
      .def_readonly("time", &EvolutionMap::time)
      .def_readonly("cos_wt", &EvolutionMap::cos_wt)
      .def_readonly("sin_wt", &EvolutionMap::sin_wt);

  // the map aliases the decomposition, so the python object keeps it alive
  m.def("make_evolution_map", &make_evolution_map, py::arg("spec"), py::arg("microscopic_time"),
        py::keep_alive<0, 1>());
  m.def("evolve_sample", &evolve_sample, py::arg("r0"), py::arg("p0"), py::arg("map"));
  m.def("evolve_means", &evolve_means, py::arg("state"), py::arg("map"));
  m.def("evolve_covariance", &evolve_covariance, py::arg("state"), py::arg("map"));

  py::enum_<Field>(m, "Field").value("R", Field::R).value("P", Field::P).value("E", Field::E);

  m.def("empirical_mean_functional", &empirical_mean_functional, py::arg("f"), py::arg("z"),
        py::arg("state"), py::arg("chain"));
  m.def("quad_var", &quad_var, py::arg("f"), py::arg("z"), py::arg("state"));
  m.def("quad_var_energy", &quad_var_energy, py::arg("f"), py::arg("state"), py::arg("chain"));

  py::class_<ModeSplitCovariance>(m, "ModeSplitCovariance")
      .def_readonly("low_count", &ModeSplitCovariance::low_count)
      .def_readonly("pp_low", &ModeSplitCovariance::pp_low)
      .def_readonly("pp_high", &ModeSplitCovariance::pp_high)
      .def_readonly("pp_cross", &ModeSplitCovariance::pp_cross)
      .def_readonly("rr_low", &ModeSplitCovariance::rr_low)
      .def_readonly("rr_high", &ModeSplitCovariance::rr_high)
      .def_readonly("rr_cross", &ModeSplitCovariance::rr_cross)
      .def_readonly("low_p_mode_mass", &ModeSplitCovariance::low_p_mode_mass)
      .def_readonly("low_r_mode_mass", &ModeSplitCovariance::low_r_mode_mass);
  m.def("mode_split_covariance", &mode_split_covariance, py::arg("state"), py::arg("spec"),
        py::arg("gamma"));

  // ------------------------------------------------------------- macro waves

  py::class_<MacroFields>(m, "MacroFields")
      .def_readonly("time", &MacroFields::time)
      .def_readonly("mean_mass", &MacroFields::mean_mass)
      .def_readonly("grid", &MacroFields::grid)
      .def_readonly("fr", &MacroFields::fr)
      .def_readonly("fp", &MacroFields::fp)
      .def_readonly("fe", &MacroFields::fe)
      .def_readonly("slaving_const", &MacroFields::slaving_const)
      .def("r_at", &MacroFields::r_at, py::arg("y"))
      .def("p_at", &MacroFields::p_at, py::arg("y"))
      .def("dr_dy", &MacroFields::dr_dy, py::arg("y"))
      .def("dp_dy", &MacroFields::dp_dy, py::arg("y"));

  m.def("solve_macro", &solve_macro, py::arg("profiles"), py::arg("mean_mass"), py::arg("t"),
        py::arg("n_modes") = 128, py::arg("grid_points") = 513,
        py::arg("bbar") = std::optional<Profile>());

  py::class_<PdeResiduals>(m, "PdeResiduals")
      .def_readonly("res_r", &PdeResiduals::res_r)
      .def_readonly("res_p", &PdeResiduals::res_p)
      .def_readonly("res_e", &PdeResiduals::res_e);
  m.def("pde_residuals", &pde_residuals, py::arg("before"), py::arg("after"));
  m.def("macro_csv", [](const MacroFields& fields) {
    std::ostringstream os;
    save_macro_csv(fields, os);
    return os.str();
  });

  // ------------------------------------------------------------ localization

  py::class_<PairSpec>(m, "PairSpec")
      .def_readonly("x", &PairSpec::x)
      .def_readonly("y", &PairSpec::y)
      .def_readonly("distance", &PairSpec::distance);

  py::enum_<CorrelatorBasis>(m, "CorrelatorBasis")
      .value("Momentum", CorrelatorBasis::Momentum)
      .value("Elongation", CorrelatorBasis::Elongation);

  py::class_<ExpFit>(m, "ExpFit")
      .def_readonly("slope", &ExpFit::slope)
      .def_readonly("intercept", &ExpFit::intercept)
      .def_readonly("r2", &ExpFit::r2)
      .def_readonly("points", &ExpFit::points);

  py::class_<LocalizationScan>(m, "LocalizationScan")
      .def_readonly("n", &LocalizationScan::n)
      .def_readonly("n_seeds", &LocalizationScan::n_seeds)
      .def_readonly("alpha", &LocalizationScan::alpha)
      .def_readonly("pairs", &LocalizationScan::pairs)
      .def_readonly("correlator", &LocalizationScan::correlator)
      .def_readonly("fit_distances", &LocalizationScan::fit_distances)
      .def_readonly("fit_means", &LocalizationScan::fit_means)
      .def_readonly("fit", &LocalizationScan::fit);

  py::class_<CorrelatorAccumulator>(m, "CorrelatorAccumulator")
      .def(py::init<int, double, std::vector<PairSpec>, CorrelatorBasis>(), py::arg("n"),
           py::arg("alpha"), py::arg("pairs"), py::arg("basis") = CorrelatorBasis::Momentum)
      .def("add", &CorrelatorAccumulator::add, py::arg("spec"))
      .def("finish", &CorrelatorAccumulator::finish);

  py::class_<OffdiagMass>(m, "OffdiagMass")
      .def_readonly("u_less", &OffdiagMass::u_less)
      .def_readonly("u_greater", &OffdiagMass::u_greater);

  m.def("high_mode_cut", &high_mode_cut, py::arg("n"), py::arg("exponent"));
  m.def("ladder_pairs", &ladder_pairs, py::arg("n"));
  m.def("fit_log_linear", &fit_log_linear, py::arg("distances"), py::arg("values"));
  m.def("min_freq_value", [](const SpectralData& spec, double gamma) {
    return min_freq_value(spec, gamma);
  }, py::arg("spec"), py::arg("gamma"));
  m.def("high_mode_offdiag_mass", &high_mode_offdiag_mass, py::arg("state"), py::arg("spec"),
        py::arg("gamma"), py::arg("theta"));

  // ----------------------------------------------------------- quantum layer

  py::class_<ThermalSpectral>(m, "ThermalSpectral")
      .def_readonly("n", &ThermalSpectral::n)
      .def_readonly("beta_site", &ThermalSpectral::beta_site)
      .def_readonly("gamma", &ThermalSpectral::gamma)
      .def_readonly("psi", &ThermalSpectral::psi)
      .def_readonly("psi_r", &ThermalSpectral::psi_r)
      .def_readonly("norm_measured", &ThermalSpectral::norm_measured)
      .def_readonly("norm_bound_paper", &ThermalSpectral::norm_bound_paper)
      .def_readonly("norm_bound_expected", &ThermalSpectral::norm_bound_expected)
      .def_readonly("near_degenerate", &ThermalSpectral::near_degenerate);

  py::class_<QuantumCovariance>(m, "QuantumCovariance")
      .def_readonly("c_pp", &QuantumCovariance::c_pp)
      .def_readonly("c_rr", &QuantumCovariance::c_rr)
      .def_readonly("c_rp_re", &QuantumCovariance::c_rp_re)
      .def_readonly("c_rp_im", &QuantumCovariance::c_rp_im)
      .def_readonly("b_profile", &QuantumCovariance::b_profile);

  py::class_<TaylorCovariance>(m, "TaylorCovariance")
      .def_readonly("c_pp", &TaylorCovariance::c_pp)
      .def_readonly("c_rr", &TaylorCovariance::c_rr)
      .def_readonly("bandwidth", &TaylorCovariance::bandwidth)
      .def_readonly("expansion_center", &TaylorCovariance::expansion_center);

  py::class_<ClusteringReport>(m, "ClusteringReport")
      .def_readonly("q_fit", &ClusteringReport::q_fit)
      .def_readonly("fit_r2", &ClusteringReport::fit_r2)
      .def_readonly("sup_d2_pp", &ClusteringReport::sup_d2_pp)
      .def_readonly("sup_d2_rr", &ClusteringReport::sup_d2_rr)
      .def_readonly("sup_d2_rp", &ClusteringReport::sup_d2_rp)
      .def_readonly("sup_d2_energy", &ClusteringReport::sup_d2_energy)
      .def_readonly("odd_moment", &ClusteringReport::odd_moment);

  py::class_<ThermalEnergyProfile>(m, "ThermalEnergyProfile")
      .def_readonly("n", &ThermalEnergyProfile::n)
      .def_readonly("n_seeds", &ThermalEnergyProfile::n_seeds)
      .def_readonly("mean", &ThermalEnergyProfile::mean)
      .def_readonly("err", &ThermalEnergyProfile::err)
      .def("as_profile", &ThermalEnergyProfile::as_profile);

  m.def("f_spec", &f_spec, py::arg("z"));
  m.def("build_thermal", &build_thermal, py::arg("chain"), py::arg("profiles"));
  m.def("quantum_covariance", &quantum_covariance, py::arg("thermal"), py::arg("chain"));
  m.def("quantum_gibbs_state",
        py::overload_cast<const DisorderedChain&, const MacroProfiles&>(&quantum_gibbs_state),
        py::arg("chain"), py::arg("profiles"));
  m.def("taylor_covariance", &taylor_covariance, py::arg("thermal"), py::arg("chain"),
        py::arg("terms"));
  m.def("verify_clustering", &verify_clustering, py::arg("qcov"), py::arg("thermal"),
        py::arg("chain"));
  m.def("thermal_energy_profile", &thermal_energy_profile, py::arg("law"), py::arg("beta"),
        py::arg("n"), py::arg("n_seeds"), py::arg("seed_base"));

  // ------------------------------------------------------------- experiments

  m.def("markov_bound", &markov_bound, py::arg("second_moment"), py::arg("delta"));
  m.def("config_hash_json", [](const std::string& text) {
    return config_hash(parse_config_json(text));
  }, py::arg("config_json"));
  // runs a full experiment from a JSON config; returns (summary_json, report_csv)
  m.def("run_experiment_json", [](const std::string& text) {
    ConvergenceReport rep = run(parse_config_json(text));
    return std::pair<std::string, std::string>(report_json(rep), report_csv(rep));
  }, py::arg("config_json"), py::call_guard<py::gil_scoped_release>());

  py::register_exception<ConfigError>(m, "ConfigError");
}
