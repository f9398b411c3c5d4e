#include "chainlab/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace chainlab {

EvolutionMap make_evolution_map(const SpectralData& spec, double microscopic_time) {
  EvolutionMap map;
  map.spec = &spec;
  map.time = microscopic_time;
  map.cos_wt = (spec.omega * microscopic_time).array().cos();
  map.sin_wt = (spec.omega * microscopic_time).array().sin();
  map.cos_wt[0] = 1.0;  // omega_0 = 0 exactly
  map.sin_wt[0] = 0.0;
  return map;
}

std::pair<Vec, Vec> evolve_sample(const Vec& r0, const Vec& p0, const EvolutionMap& map) {
  const SpectralData& spec = *map.spec;
  auto [rhat, phat] = mode_transform(r0, p0, spec);
  Vec rhat_t = map.cos_wt.cwiseProduct(rhat) + map.sin_wt.cwiseProduct(phat);
  Vec phat_t = map.cos_wt.cwiseProduct(phat) - map.sin_wt.cwiseProduct(rhat);
  return inverse_mode_transform(rhat_t, phat_t, spec);
}

std::pair<Vec, Vec> evolve_means(const GaussianChainState& state, const EvolutionMap& map) {
  return evolve_sample(state.mean_r, state.mean_p, map);
}

GaussianChainState evolve_covariance(const GaussianChainState& state, const EvolutionMap& map) {
  state.validate();
  const SpectralData& spec = *map.spec;
  const int n = spec.n;
  if (state.n() != n) throw std::invalid_argument("evolve_covariance: state/spectrum size mismatch");
  if (map.time == 0.0) return state;

  const Mat& w = spec.phi_p_tilde;                    // forward momentum weights
  Mat v = spec.sqrt_mass.asDiagonal() * spec.phi_p;   // inverse momentum weights
  const Mat& fr = spec.phi_r;

  // Mode-space covariance on the full index set; the r side keeps row/column 0
  // identically zero (rhat_0 = 0 by convention).
  Mat spp = w.transpose() * state.c_pp * w;
  Mat srr = Mat::Zero(n, n);
  srr.bottomRightCorner(n - 1, n - 1) = fr.transpose() * state.c_rr * fr;
  Mat srp = Mat::Zero(n, n);
  srp.bottomRows(n - 1) = fr.transpose() * state.c_rp_re * w;

  const auto dc = map.cos_wt.asDiagonal();
  const auto ds = map.sin_wt.asDiagonal();

  // Per-mode rotation of the quadratic form, using s_0 = 0 to keep the r-side
  // zero row/column intact.
  Mat srr_t = dc * srr * dc + dc * srp * ds + ds * srp.transpose() * dc + ds * spp * ds;
  Mat spp_t = dc * spp * dc - dc * srp.transpose() * ds - ds * srp * dc + ds * srr * ds;
  Mat srp_t = dc * srp * dc - dc * srr * ds + ds * spp * dc - ds * srp.transpose() * ds;

  GaussianChainState out;
  out.flavor = state.flavor;
  auto [mr, mp] = evolve_means(state, map);
  out.mean_r = std::move(mr);
  out.mean_p = std::move(mp);
  out.c_pp = v * spp_t * v.transpose();
  out.c_rr = fr * srr_t.bottomRightCorner(n - 1, n - 1) * fr.transpose();
  out.c_rp_re = fr * srp_t.bottomRows(n - 1) * v.transpose();

  if (state.flavor == StateFlavor::QuantumQuasiFree) {
    Mat irp = Mat::Zero(n, n);
    irp.bottomRows(n - 1) = fr.transpose() * state.c_rp_im * w;

    // Commutators are invariant under the flow, so the imaginary parts of the
    // evolved position and momentum blocks must cancel identically.
    Mat irr_t = dc * irp * ds - ds * irp.transpose() * dc;
    Mat ipp_t = ds * irp.transpose() * dc - dc * irp * ds;
    double drift = std::max(irr_t.cwiseAbs().maxCoeff(), ipp_t.cwiseAbs().maxCoeff());
    if (drift >= 1e-10)
      throw std::runtime_error("evolve_covariance: commutator blocks drifted into r/p diagonals");

    Mat irp_t = dc * irp * dc + ds * irp.transpose() * ds;
    out.c_rp_im = fr * irp_t.bottomRows(n - 1) * v.transpose();
  }
  out.validate();
  return out;
}

void FunctionalResult::validate() const {
  if (!std::isfinite(value)) throw std::runtime_error("functional value not finite");
  bool quad = kind == FunctionalKind::QuadVarR || kind == FunctionalKind::QuadVarP ||
              kind == FunctionalKind::QuadVarE;
  if (quad && value < 0.0) throw std::runtime_error("quadratic variation negative");
}

const char* functional_kind_name(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::MeanR: return "mean_r";
    case FunctionalKind::MeanP: return "mean_p";
    case FunctionalKind::MeanE: return "mean_e";
    case FunctionalKind::QuadVarR: return "quad_var_r";
    case FunctionalKind::QuadVarP: return "quad_var_p";
    case FunctionalKind::QuadVarE: return "quad_var_e";
  }
  return "unknown";
}

namespace {

// f sampled on the 1-based site grid x/n, x = 1..n.
Vec site_samples(const Profile& f, int n) {
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = f(double(i + 1) / n);
  return out;
}

}  // namespace

double empirical_mean_functional(const Profile& f, Field z, const GaussianChainState& state,
                                 const DisorderedChain& chain) {
  state.validate();
  const int n = state.n();
  if (chain.n != n) throw std::invalid_argument("empirical_mean_functional: chain size mismatch");
  Vec fs = site_samples(f, n);
  switch (z) {
    case Field::R:
      return fs.head(n - 1).dot(state.mean_r) / n;
    case Field::P:
      return fs.dot(state.mean_p) / n;
    case Field::E: {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) {
        double kin = (state.mean_p[x] * state.mean_p[x] + state.c_pp(x, x)) / (2.0 * chain.mass[x]);
        acc += fs[x] * kin;
        if (x + 1 < n) {
          double pot = (state.mean_r[x] * state.mean_r[x] + state.c_rr(x, x)) / 2.0;
          acc += fs[x] * pot;
        }
      }
      return acc / n;
    }
  }
  throw std::invalid_argument("empirical_mean_functional: unknown field");
}

double quad_var(const Profile& f, Field z, const GaussianChainState& state) {
  state.validate();
  const int n = state.n();
  Vec fs = site_samples(f, n);
  double value = 0.0;
  if (z == Field::P) {
    value = fs.dot(state.c_pp * fs) / (double(n) * n);
  } else if (z == Field::R) {
    Vec fr = fs.head(n - 1);
    value = fr.dot(state.c_rr * fr) / (double(n) * n);
  } else {
    throw std::invalid_argument("quad_var: use quad_var_energy for the energy field");
  }
  return std::max(value, 0.0);
}

double quad_var_energy(const Profile& f, const GaussianChainState& state, const DisorderedChain& chain) {
  state.validate();
  const int n = state.n();
  if (chain.n != n) throw std::invalid_argument("quad_var_energy: chain size mismatch");

  // Writing e_x - <e_x> = Q_x + L_x with the quadratic part
  //   Q_x = (pt_x^2 - <pt_x^2>)/(2 m_x) + (rt_x^2 - <rt_x^2>)/2
  // and the linear part L_x = mean_p_x pt_x / m_x + mean_r_x rt_x (pt, rt the
  // centered fields, the r terms absent at the last site), the pairing rule for
  // fourth moments turns n^2 * Var((1/n) sum f e) into
  //   1/2 u'(Cpp o Cpp)u + 1/2 fr'(Crr o Crr)fr + fr'(S o S - K o K)u
  //   + gp' Cpp gp + gr' Crr gr + 2 gr' S gp
  // with u = f/m on sites, fr = f on bonds, gp = f o mean_p / m,
  // gr = fr o mean_r, S = Re c_rp, K = Im c_rp (o = entrywise product; odd
  // moments vanish, so Q and L do not mix). The K o K subtraction comes from
  // the two operator orderings of the mixed quartic term; for the classical
  // flavor K = 0 and the formula is plain Isserlis.
  Vec fs = site_samples(f, n);
  Vec u = fs.cwiseQuotient(chain.mass);
  Vec fr = fs.head(n - 1);
  Vec gp = u.cwiseProduct(state.mean_p);
  Vec gr = fr.cwiseProduct(state.mean_r);

  double quad = 0.5 * u.dot(state.c_pp.cwiseAbs2() * u) + 0.5 * fr.dot(state.c_rr.cwiseAbs2() * fr);
  Mat cross_sq = state.c_rp_re.cwiseAbs2();
  if (state.flavor == StateFlavor::QuantumQuasiFree) cross_sq -= state.c_rp_im.cwiseAbs2();
  quad += fr.dot(cross_sq * u);

  double lin = gp.dot(state.c_pp * gp) + gr.dot(state.c_rr * gr) + 2.0 * gr.dot(state.c_rp_re * gp);

  return std::max(quad + lin, 0.0) / (double(n) * n);
}

ModeSplitCovariance mode_split_covariance(const GaussianChainState& state, const SpectralData& spec,
                                          double gamma) {
  state.validate();
  if (!(gamma > 0.0 && gamma < 0.5))
    throw std::invalid_argument("mode_split_covariance: gamma must lie in (0, 1/2)");
  const int n = spec.n;
  if (state.n() != n) throw std::invalid_argument("mode_split_covariance: size mismatch");

  // Low modes: k <= n^{1-gamma}. High modes form the interval (n^{1-gamma}, n].
  double cut = std::pow(double(n), 1.0 - gamma);
  int low_count = 0;
  while (low_count < n && double(low_count) <= cut) ++low_count;

  const Mat& w = spec.phi_p_tilde;
  Mat v = spec.sqrt_mass.asDiagonal() * spec.phi_p;
  const Mat& fr = spec.phi_r;

  Mat spp = w.transpose() * state.c_pp * w;
  Mat srr = fr.transpose() * state.c_rr * fr;

  ModeSplitCovariance out;
  out.low_count = low_count;

  auto split_block = [](const Mat& s, const Mat& basis, int lc, Mat& low, Mat& high, Mat& cross) {
    const int m = int(basis.cols());
    Mat bl = basis.leftCols(lc);
    Mat bh = basis.rightCols(m - lc);
    low = bl * s.topLeftCorner(lc, lc) * bl.transpose();
    high = bh * s.bottomRightCorner(m - lc, m - lc) * bh.transpose();
    Mat mixed = bl * s.topRightCorner(lc, m - lc) * bh.transpose();
    cross = mixed + mixed.transpose();
  };

  split_block(spp, v, low_count, out.pp_low, out.pp_high, out.pp_cross);
  // r-side mode indices start at 1; the low set there is k = 1..low_count-1.
  split_block(srr, fr, low_count - 1, out.rr_low, out.rr_high, out.rr_cross);

  for (int k = 0; k < low_count; ++k) out.low_p_mode_mass += spp(k, k);
  for (int k = 0; k + 1 < low_count; ++k) out.low_r_mode_mass += srr(k, k);
  out.low_p_mode_mass /= n;
  out.low_r_mode_mass /= n;
  return out;
}

}  // namespace chainlab
