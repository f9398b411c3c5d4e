#include "chainlab/classical_state.hpp"

#include <cmath>
#include <stdexcept>

namespace chainlab {

void GaussianChainState::validate() const {
  const int nn = n();
  if (nn < 2) throw std::invalid_argument("state needs n >= 2");
  if (mean_r.size() != nn - 1) throw std::invalid_argument("state: mean_r size");
  if (c_rr.rows() != nn - 1 || c_rr.cols() != nn - 1) throw std::invalid_argument("state: c_rr size");
  if (c_pp.rows() != nn || c_pp.cols() != nn) throw std::invalid_argument("state: c_pp size");
  if (c_rp_re.rows() != nn - 1 || c_rp_re.cols() != nn) throw std::invalid_argument("state: c_rp size");
  if (flavor == StateFlavor::Classical) {
    if (c_rp_im.size() != 0) throw std::invalid_argument("state: classical flavor carries no imaginary block");
  } else {
    if (c_rp_im.rows() != nn - 1 || c_rp_im.cols() != nn)
      throw std::invalid_argument("state: c_rp_im size");
  }
}

GaussianChainState local_gibbs_moments(const DisorderedChain& chain, const MacroProfiles& profiles) {
  chain.validate();
  profiles.validate();
  const int n = chain.n;
  const double mbar = chain.mean_mass;

  GaussianChainState st;
  st.flavor = StateFlavor::Classical;
  st.mean_r.resize(n - 1);
  st.mean_p.resize(n);
  st.c_rr = Mat::Zero(n - 1, n - 1);
  st.c_pp = Mat::Zero(n, n);
  st.c_rp_re = Mat::Zero(n - 1, n);

  for (int i = 0; i < n; ++i) {
    double y = double(i + 1) / n;
    st.mean_p[i] = profiles.pbar(y) * chain.mass[i] / mbar;
    st.c_pp(i, i) = chain.mass[i] / profiles.beta(y);
  }
  for (int i = 0; i + 1 < n; ++i) {
    double y = double(i + 1) / n;
    st.mean_r[i] = profiles.rbar(y);
    st.c_rr(i, i) = 1.0 / profiles.beta(y);
  }
  st.validate();
  return st;
}

std::pair<Vec, Vec> sample_state(const GaussianChainState& state, StreamRng& rng) {
  state.validate();
  if (state.flavor != StateFlavor::Classical)
    throw std::invalid_argument("sample_state: only the classical flavor is samplable");
  const int n = state.n();
  double offdiag = 0.0;
  for (int j = 0; j < n - 1; ++j)
    for (int i = 0; i < n - 1; ++i)
      if (i != j) offdiag = std::max(offdiag, std::abs(state.c_rr(i, j)));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) offdiag = std::max(offdiag, std::abs(state.c_pp(i, j)));
  offdiag = std::max(offdiag, state.c_rp_re.cwiseAbs().maxCoeff());
  if (offdiag != 0.0)
    throw std::invalid_argument("sample_state: covariance must be diagonal (initial product state)");

  Vec r(n - 1), p(n);
  for (int i = 0; i + 1 < n; ++i) r[i] = state.mean_r[i] + std::sqrt(state.c_rr(i, i)) * rng.normal();
  for (int i = 0; i < n; ++i) p[i] = state.mean_p[i] + std::sqrt(state.c_pp(i, i)) * rng.normal();
  return {std::move(r), std::move(p)};
}

}  // namespace chainlab
