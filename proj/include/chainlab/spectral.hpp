#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chainlab/chain.hpp"

namespace chainlab {

struct EigResult {
  Vec lambda;   // ascending
  Mat vectors;  // orthonormal columns, sign-fixed: largest-magnitude entry positive
};

// Full eigendecomposition of a symmetric tridiagonal matrix by implicit-shift QL.
// Eigenvalues within 1e-12 of zero are clamped to zero. Throws if any eigenvalue
// fails to converge within the iteration cap, naming the mode index.
EigResult eig_sym_tridiag(const TridiagSym& a);

// Normal-mode data for one disordered chain.
//
// omega[k] are the mode frequencies, omega[0] = 0 exactly (the computed kernel
// eigenpair is snapped to the closed-form ground state, which is proportional
// to sqrt(mass)). phi_p columns diagonalize the momentum-side matrix; the
// bond-side basis is phi_r with column k-1 = (1/omega[k]) * forward-difference
// of phi_p_tilde column k.
struct SpectralData {
  int n = 0;
  Vec omega;         // length n
  Mat phi_p;         // n x n, orthonormal columns
  Mat phi_p_tilde;   // n x n, column k = phi_p.col(k) / sqrt(mass)
  Mat phi_r;         // (n-1) x (n-1), orthonormal columns, modes k = 1..n-1
  Vec sqrt_mass;     // length n, copied from the chain
  std::vector<int> near_degenerate;  // k where lambda[k+1]-lambda[k] < 1e-13
};

// Worst-case errors of the spectral invariants. `full` checks every pair/mode;
// otherwise a deterministic sample is checked. phi_r_orth_margin is the maximum
// over checked pairs of |gram error| divided by its admissible bound, which for
// the lowest modes grows like eps*norm(A)/(omega_k*omega_k'): below 1 is a pass.
struct SpectralCheck {
  double phi_p_orth = 0;        // max |phi_p' phi_p - I|
  double phi_r_orth = 0;        // max |phi_r' phi_r - I|
  double phi_r_orth_margin = 0; // scale-aware pass measure, <= 1 required
  double eig_residual_rel = 0;  // max_k |A_p phi^k - omega_k^2 phi^k|_inf / |A_p|
  double completeness = 0;      // max_x |sum_k (phi^k_x)^2 - 1|
  double phi_r_reproduce = 0;   // max defect of the definition of phi_r
  double ar_residual = 0;       // max_k |A_r phi_r^k - omega_k^2 phi_r^k|_inf
};

SpectralCheck validate_spectral(const DisorderedChain& chain, const SpectralData& spec, bool full);

// Diagonalize the chain and assemble the mode bases; runs a sampled validation
// and throws if it fails.
SpectralData build_spectral(const DisorderedChain& chain);

// Mode coefficients of a phase-space point. rhat has length n with rhat[0] = 0
// by convention; phat[k] is the coefficient along mode k.
std::pair<Vec, Vec> mode_transform(const Vec& r, const Vec& p, const SpectralData& spec);

// Inverse of mode_transform: reconstruct (r, p) from coefficients.
std::pair<Vec, Vec> inverse_mode_transform(const Vec& rhat, const Vec& phat, const SpectralData& spec);

// Little-endian binary cache of one chain's spectral data. Loading verifies the
// header and that the stored masses match the chain bit for bit; the rebuilt
// data is bit-identical to the saved one.
void save_spectral(const SpectralData& spec, const DisorderedChain& chain, const std::string& path);
SpectralData load_spectral(const DisorderedChain& chain, const std::string& path);

// Build, or reuse the cache file under dir if present. Empty dir: always build.
SpectralData load_or_build_spectral(const DisorderedChain& chain, const std::string& cache_dir);

}  // namespace chainlab
