#pragma once

#include <cstdint>
#include <vector>

#include "chainlab/classical_state.hpp"
#include "chainlab/spectral.hpp"

namespace chainlab {

// sqrt(z) coth(sqrt(z)) extended by 1 at z=0; the spectral function whose
// values (gamma_k/2) coth(gamma_k/2) = f_spec(gamma_k^2/4) weight the thermal
// two-point sums. Stable near zero via its Taylor series.
double f_spec(double z);

// Eigenstructure of the thermally weighted chain matrices. beta_site[x] is
// beta((x+1)/n); the same values serve as the bond weights (bond y carries
// the inverse temperature of its left site).
struct ThermalSpectral {
  int n = 0;
  TridiagSym a_p_beta;
  TridiagSym a_r_beta;
  Vec beta_site;
  Vec gamma;                     // thermal frequencies, ascending, gamma[0] = 0
  Mat psi;                       // orthonormal eigenbasis of a_p_beta
  Mat psi_r;                     // bond basis, eigenbasis of a_r_beta
  Vec sqrt_m_over_beta;          // sqrt(m_x / beta_x)
  double norm_measured = 0.0;    // largest eigenvalue of a_p_beta
  double norm_bound_paper = 0.0;     // 4 beta_max^2 / m_min
  double norm_bound_expected = 0.0;  // 4 beta_max / m_min, sharper when beta <= 1
  std::vector<int> near_degenerate;
};

ThermalSpectral build_thermal(const DisorderedChain& chain, const MacroProfiles& profiles);

// Centered two-point functions of the locally Gibbs quasi-free state. The
// cross block is complex: a symmetric real part (zero at construction) plus
// the canonical commutator, stored as separate real matrices.
struct QuantumCovariance {
  Mat c_pp;       // n x n
  Mat c_rr;       // (n-1) x (n-1)
  Mat c_rp_re;    // (n-1) x n
  Mat c_rp_im;    // (n-1) x n: +1/2 at x=y+1, -1/2 at x=y
  Vec b_profile;  // per-site thermal energy; last site is kinetic only
};

QuantumCovariance quantum_covariance(const ThermalSpectral& thermal,
                                     const DisorderedChain& chain);

// Assembles the full state (profile means + quantum covariance blocks) in the
// form the evolution maps consume.
GaussianChainState quantum_gibbs_state(const DisorderedChain& chain, const MacroProfiles& profiles);
GaussianChainState quantum_gibbs_state(const DisorderedChain& chain, const MacroProfiles& profiles,
                                       const ThermalSpectral& thermal,
                                       const QuantumCovariance& qcov);

// Truncated Taylor evaluation of the spectral function on the tridiagonal
// thermal matrices, expanded about the midpoint of the admissible spectral
// interval. Entries farther than `bandwidth` from the diagonal are structural
// zeros. Unlike quantum_covariance this keeps the zero-mode term f_spec(0),
// because a matrix function cannot excise a single eigenvector.
struct TaylorCovariance {
  Mat c_pp;
  Mat c_rr;
  int bandwidth = 0;
  double expansion_center = 0.0;
};

TaylorCovariance taylor_covariance(const ThermalSpectral& thermal, const DisorderedChain& chain,
                                   int terms);

// The decay being certified is that of the spectral-function form f(A) of the
// covariance. Dropping the center-of-mass mode subtracts a rank-one term of
// size 1/n from the momentum block; that term is uniformly small but distance
// independent, so it is added back before fitting and taking suprema. The
// elongation block has no such mode and is used as constructed.
struct ClusteringReport {
  double q_fit = 0.0;       // fitted per-site decay base of |c_pp| off-diagonals
  double fit_r2 = 0.0;
  double sup_d2_pp = 0.0;   // sup over pairs of |x-y|^2 |C_xy|, per block
  double sup_d2_rr = 0.0;
  double sup_d2_rp = 0.0;   // modulus of the complex cross entries
  double sup_d2_energy = 0.0;  // Wick energy-energy covariance decay constant
  double odd_moment = 0.0;  // identically zero for a quasi-free state
};

ClusteringReport verify_clustering(const QuantumCovariance& qcov, const ThermalSpectral& thermal,
                                   const DisorderedChain& chain);

// Disorder-averaged per-site thermal energy with bootstrap error bars; the
// estimate of the macroscopic profile b(y) feeding the quantum wave system.
struct ThermalEnergyProfile {
  int n = 0;
  int n_seeds = 0;
  Vec mean;
  Vec err;      // bootstrap standard error per site
  Profile as_profile() const;  // tabulated on the uniform [0,1] grid
};

ThermalEnergyProfile thermal_energy_profile(const MassLaw& law, const Profile& beta, int n,
                                            int n_seeds, std::uint64_t seed_base);

}  // namespace chainlab
