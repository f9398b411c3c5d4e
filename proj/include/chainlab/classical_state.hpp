#pragma once

#include <utility>

#include "chainlab/chain.hpp"
#include "chainlab/profiles.hpp"
#include "chainlab/rng.hpp"

namespace chainlab {

enum class StateFlavor { Classical, QuantumQuasiFree };

// First and second moments of a Gaussian (or quasi-free) chain state.
//
// Sites carry 1-based grid positions x/n; storage is 0-based, so index i maps
// to grid point (i+1)/n. Bonds are indexed the same way on the r side. The
// cross block stores c_rp(y, x) = Cov(r_y, p_x); its imaginary part is only
// allocated for the quasi-free flavor, where the stored real blocks are the
// symmetrized correlators.
struct GaussianChainState {
  StateFlavor flavor = StateFlavor::Classical;
  Vec mean_r;   // length n-1
  Vec mean_p;   // length n
  Mat c_rr;     // (n-1) x (n-1), symmetric
  Mat c_pp;     // n x n, symmetric
  Mat c_rp_re;  // (n-1) x n
  Mat c_rp_im;  // (n-1) x n for QuantumQuasiFree, 0 x 0 for Classical

  int n() const { return int(mean_p.size()); }
  void validate() const;
};

// Exact moments of the locally Gibbs classical state: means follow the macro
// profiles (momentum weighted by m_x/mean mass), covariance is diagonal with
// Var(r_y) = 1/beta(y/n), Var(p_x) = m_x/beta(x/n), and no cross correlation.
GaussianChainState local_gibbs_moments(const DisorderedChain& chain, const MacroProfiles& profiles);

// Draw one (r, p) configuration. Only the classical flavor with diagonal
// covariance (the t=0 product state) is samplable; anything else throws.
// Draw order is fixed: all r components, then all p components.
std::pair<Vec, Vec> sample_state(const GaussianChainState& state, StreamRng& rng);

}  // namespace chainlab
