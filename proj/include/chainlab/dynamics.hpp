#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "chainlab/classical_state.hpp"
#include "chainlab/profiles.hpp"
#include "chainlab/spectral.hpp"

namespace chainlab {

// Harmonic flow at a fixed microscopic time: every mode rotates by omega_k * time,
//   rhat_k(t) = cos * rhat_k + sin * phat_k,
//   phat_k(t) = cos * phat_k - sin * rhat_k.
// Callers studying hydrodynamic scales pass time = n * t.
struct EvolutionMap {
  const SpectralData* spec = nullptr;
  double time = 0.0;
  Vec cos_wt, sin_wt;
};

EvolutionMap make_evolution_map(const SpectralData& spec, double microscopic_time);

std::pair<Vec, Vec> evolve_sample(const Vec& r0, const Vec& p0, const EvolutionMap& map);

// Means follow the same linear flow as samples.
std::pair<Vec, Vec> evolve_means(const GaussianChainState& state, const EvolutionMap& map);

// Push the full state (means and covariance blocks) through the flow. The
// covariance is rotated in mode space and transformed back, O(n^3) in the
// transforms and O(n^2) in the rotation. For the quasi-free flavor the
// imaginary parts of the would-be c_rr(t) and c_pp(t) are computed in mode
// space and must vanish (commutators are invariant); exceeding 1e-10 throws.
GaussianChainState evolve_covariance(const GaussianChainState& state, const EvolutionMap& map);

enum class Field { R, P, E };

// (1/n) sum_x f(x/n) <z_x>. For z = E the site energy mean is
// (mean_p^2 + c_pp,xx)/(2 m_x) + (mean_r^2 + c_rr,xx)/2, kinetic-only at the
// last site where no bond remains.
double empirical_mean_functional(const Profile& f, Field z, const GaussianChainState& state,
                                 const DisorderedChain& chain);

// (1/n^2) f' C_zz f, the variance of the empirical average of field z in {R, P}.
double quad_var(const Profile& f, Field z, const GaussianChainState& state);

// Variance of the empirical energy average, by the pairing rule for Gaussian and
// quasi-free states (see the implementation for the assembled formula).
double quad_var_energy(const Profile& f, const GaussianChainState& state, const DisorderedChain& chain);

enum class FunctionalKind { MeanR, MeanP, MeanE, QuadVarR, QuadVarP, QuadVarE };

// One evaluated functional with its provenance, as rows are reported.
struct FunctionalResult {
  std::string f_name;
  FunctionalKind kind = FunctionalKind::MeanP;
  double value = 0.0;
  int n = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  void validate() const;
};

const char* functional_kind_name(FunctionalKind kind);

// Site-space covariance blocks of the low-mode portion (modes k <= n^{1-gamma}),
// the high-mode portion, and the symmetrized cross part. low + high + cross
// reassembles the full block. low_*_mode_mass = (1/n) sum of the low-mode
// variances, the quantity bounded by n^{-gamma}/beta_min.
struct ModeSplitCovariance {
  int low_count = 0;  // number of modes in the low set, counting mode 0
  Mat pp_low, pp_high, pp_cross;
  Mat rr_low, rr_high, rr_cross;
  double low_p_mode_mass = 0.0;
  double low_r_mode_mass = 0.0;
};

ModeSplitCovariance mode_split_covariance(const GaussianChainState& state, const SpectralData& spec,
                                          double gamma);

}  // namespace chainlab
