"""Disordered harmonic chain laboratory: python surface over the C++ core."""

from ._core import (
    ClusteringReport,
    ConfigError,
    CorrelatorAccumulator,
    CorrelatorBasis,
    DisorderedChain,
    EigResult,
    EvolutionMap,
    ExpFit,
    Field,
    GaussianChainState,
    LocalizationScan,
    MacroFields,
    MacroProfiles,
    MassLaw,
    ModeSplitCovariance,
    OffdiagMass,
    PairSpec,
    PdeResiduals,
    Profile,
    QuantumCovariance,
    SpectralData,
    StateFlavor,
    StreamRng,
    TaylorCovariance,
    ThermalEnergyProfile,
    ThermalSpectral,
    TridiagSym,
    __version__,
    build_ap,
    build_ar,
    build_spectral,
    build_thermal,
    config_hash_json,
    eig_sym_tridiag,
    empirical_mean_functional,
    evolve_covariance,
    evolve_means,
    evolve_sample,
    f_spec,
    fit_log_linear,
    high_mode_cut,
    high_mode_offdiag_mass,
    integrate,
    inverse_mode_transform,
    ladder_pairs,
    local_gibbs_moments,
    macro_csv,
    make_evolution_map,
    markov_bound,
    min_freq_value,
    mode_split_covariance,
    mode_transform,
    pde_residuals,
    quad_var,
    quad_var_energy,
    quantum_covariance,
    quantum_gibbs_state,
    run_experiment_json,
    sample_masses,
    sample_state,
    solve_macro,
    taylor_covariance,
    thermal_energy_profile,
    verify_clustering,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
