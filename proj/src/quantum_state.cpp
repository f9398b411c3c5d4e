#include "chainlab/quantum_state.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "chainlab/rng.hpp"

namespace chainlab {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

double f_spec(double z) {
  if (z < 0.0) throw std::invalid_argument("f_spec: negative argument");
  if (z < 1e-4) return 1.0 + z / 3.0 - z * z / 45.0 + 2.0 * z * z * z / 945.0;
  const double w = std::sqrt(z);
  return w / std::tanh(w);
}

ThermalSpectral build_thermal(const DisorderedChain& chain, const MacroProfiles& profiles) {
  chain.validate();
  profiles.validate();
  const int n = chain.n;

  ThermalSpectral t;
  t.n = n;
  t.beta_site.resize(n);
  for (int x = 0; x < n; ++x) t.beta_site[x] = profiles.beta(double(x + 1) / n);
  t.sqrt_m_over_beta = (chain.mass.array() / t.beta_site.array()).sqrt();

  // weighted Laplacian conjugated by M_beta^{-1/2}; bond y carries beta of
  // its left site, boundary bonds are absent
  t.a_p_beta.diag.resize(n);
  t.a_p_beta.off.resize(n - 1);
  for (int x = 0; x < n; ++x) {
    const double left = (x > 0) ? t.beta_site[x - 1] : 0.0;
    const double right = (x + 1 < n) ? t.beta_site[x] : 0.0;
    t.a_p_beta.diag[x] = t.beta_site[x] / chain.mass[x] * (left + right);
  }
  for (int x = 0; x + 1 < n; ++x)
    t.a_p_beta.off[x] = -t.beta_site[x] * std::sqrt(t.beta_site[x] * t.beta_site[x + 1] /
                                                    (chain.mass[x] * chain.mass[x + 1]));

  t.a_r_beta.diag.resize(n - 1);
  t.a_r_beta.off.resize(std::max(0, n - 2));
  for (int y = 0; y + 1 < n; ++y)
    t.a_r_beta.diag[y] = t.beta_site[y] * (t.beta_site[y] / chain.mass[y] +
                                           t.beta_site[y + 1] / chain.mass[y + 1]);
  for (int y = 0; y + 2 < n; ++y)
    t.a_r_beta.off[y] =
        -std::sqrt(t.beta_site[y] * t.beta_site[y + 1]) * t.beta_site[y + 1] / chain.mass[y + 1];

  EigResult eig = eig_sym_tridiag(t.a_p_beta);
  const double norm_bound = t.a_p_beta.max_abs();
  if (std::abs(eig.lambda[0]) > 1e-10 * norm_bound)
    throw std::runtime_error("build_thermal: kernel eigenvalue missing");
  eig.lambda[0] = 0.0;
  if (!(eig.lambda[1] > 0.0))
    throw std::runtime_error("build_thermal: second eigenvalue not positive");
  for (int k = 0; k + 1 < n; ++k)
    if (eig.lambda[k + 1] - eig.lambda[k] < 1e-13) t.near_degenerate.push_back(k);

  t.gamma = eig.lambda.cwiseMax(0.0).cwiseSqrt();
  t.psi = std::move(eig.vectors);
  t.psi.col(0) = t.sqrt_m_over_beta / t.sqrt_m_over_beta.norm();
  Vec overlaps = t.psi.rightCols(n - 1).transpose() * t.psi.col(0);
  t.psi.rightCols(n - 1).noalias() -= t.psi.col(0) * overlaps.transpose();
  for (int k = 1; k < n; ++k) t.psi.col(k) /= t.psi.col(k).norm();

  t.psi_r.resize(n - 1, n - 1);
  for (int k = 1; k < n; ++k) {
    Vec u = t.psi.col(k).cwiseQuotient(t.sqrt_m_over_beta);
    for (int y = 0; y + 1 < n; ++y)
      t.psi_r(y, k - 1) = std::sqrt(t.beta_site[y]) * (u[y + 1] - u[y]) / t.gamma[k];
  }

  t.norm_measured = t.gamma[n - 1] * t.gamma[n - 1];
  const double beta_max = t.beta_site.maxCoeff();
  const double m_min = chain.mass.minCoeff();
  t.norm_bound_paper = 4.0 * beta_max * beta_max / m_min;
  t.norm_bound_expected = 4.0 * beta_max / m_min;
  if (t.norm_measured > t.norm_bound_paper * (1.0 + 1e-12))
    throw std::runtime_error("build_thermal: operator norm exceeds its uniform bound");

  // sampled validation, same thresholds as the untempered spectral build
  double psi_orth = 0.0, resid = 0.0, r_margin = 0.0, ar_resid = 0.0;
  auto probe = [&](int k) {
    Vec g = t.psi.transpose() * t.psi.col(k);
    g[k] -= 1.0;
    psi_orth = std::max(psi_orth, g.cwiseAbs().maxCoeff());
    const double lam = t.gamma[k] * t.gamma[k];
    Vec res = t.a_p_beta.apply(t.psi.col(k)) - lam * t.psi.col(k);
    resid = std::max(resid, res.cwiseAbs().maxCoeff() / norm_bound);
    if (k >= 1) {
      Vec gr = t.psi_r.transpose() * t.psi_r.col(k - 1);
      for (int j = 0; j + 1 < n; ++j) {
        const double err = std::abs(gr[j] - (j == k - 1 ? 1.0 : 0.0));
        const double bound =
            std::max(1e-10, 64.0 * kEps * norm_bound / (t.gamma[j + 1] * t.gamma[k]));
        r_margin = std::max(r_margin, err / bound);
      }
      Vec rres = t.a_r_beta.apply(t.psi_r.col(k - 1)) - lam * t.psi_r.col(k - 1);
      ar_resid = std::max(ar_resid, rres.cwiseAbs().maxCoeff());
    }
  };
  for (int k = 0; k < std::min(8, n); ++k) probe(k);
  for (int k = n - 1; k >= std::max(0, n - 4); --k) probe(k);
  for (int k = 0; k < n; k += std::max(1, n / 8)) probe(k);

  if (!(psi_orth < 1e-10)) throw std::runtime_error("build_thermal: basis not orthonormal");
  if (!(resid < 1e-9)) throw std::runtime_error("build_thermal: eigen-residual too large");
  if (!(r_margin <= 1.0)) throw std::runtime_error("build_thermal: bond basis not orthonormal");
  if (!(ar_resid < 1e-8))
    throw std::runtime_error("build_thermal: bond-side eigen-residual too large");
  return t;
}

QuantumCovariance quantum_covariance(const ThermalSpectral& thermal,
                                     const DisorderedChain& chain) {
  const int n = thermal.n;
  if (chain.n != n) throw std::invalid_argument("quantum_covariance: size mismatch");

  Vec weights(n);
  weights[0] = 0.0;  // center-of-mass mode carries no fluctuation
  for (int k = 1; k < n; ++k)
    weights[k] = f_spec(thermal.gamma[k] * thermal.gamma[k] / 4.0);

  QuantumCovariance q;
  Mat core = thermal.psi * weights.asDiagonal() * thermal.psi.transpose();
  q.c_pp = thermal.sqrt_m_over_beta.asDiagonal() * core * thermal.sqrt_m_over_beta.asDiagonal();

  Vec wr = weights.tail(n - 1);
  Mat core_r = thermal.psi_r * wr.asDiagonal() * thermal.psi_r.transpose();
  Vec inv_sqrt_bond = thermal.beta_site.head(n - 1).cwiseSqrt().cwiseInverse();
  q.c_rr = inv_sqrt_bond.asDiagonal() * core_r * inv_sqrt_bond.asDiagonal();

  q.c_rp_re = Mat::Zero(n - 1, n);
  q.c_rp_im = Mat::Zero(n - 1, n);
  for (int y = 0; y + 1 < n; ++y) {
    q.c_rp_im(y, y) = -0.5;
    q.c_rp_im(y, y + 1) = 0.5;
  }

  q.b_profile.resize(n);
  for (int x = 0; x < n; ++x) {
    double b = q.c_pp(x, x) / chain.mass[x];
    if (x + 1 < n) b += q.c_rr(x, x);
    q.b_profile[x] = 0.5 * b;
  }
  return q;
}

GaussianChainState quantum_gibbs_state(const DisorderedChain& chain, const MacroProfiles& profiles,
                                       const ThermalSpectral& thermal,
                                       const QuantumCovariance& qcov) {
  profiles.validate(true);
  if (thermal.n != chain.n) throw std::invalid_argument("quantum_gibbs_state: size mismatch");
  const int n = chain.n;
  const double mbar = chain.law.mean();

  GaussianChainState st;
  st.flavor = StateFlavor::QuantumQuasiFree;
  st.mean_p.resize(n);
  st.mean_r.resize(n - 1);
  for (int x = 0; x < n; ++x)
    st.mean_p[x] = profiles.pbar(double(x + 1) / n) * chain.mass[x] / mbar;
  for (int y = 0; y + 1 < n; ++y) st.mean_r[y] = profiles.rbar(double(y + 1) / n);
  st.c_pp = qcov.c_pp;
  st.c_rr = qcov.c_rr;
  st.c_rp_re = qcov.c_rp_re;
  st.c_rp_im = qcov.c_rp_im;
  st.validate();
  return st;
}

GaussianChainState quantum_gibbs_state(const DisorderedChain& chain,
                                       const MacroProfiles& profiles) {
  auto thermal = build_thermal(chain, profiles);
  auto qcov = quantum_covariance(thermal, chain);
  return quantum_gibbs_state(chain, profiles, thermal, qcov);
}

namespace {

// (T - alpha I) Q for symmetric tridiagonal T, scaled by `scale`
Mat shifted_tridiag_product(const TridiagSym& t, double scale, double alpha, const Mat& q) {
  const int n = int(t.diag.size());
  Mat out(n, q.cols());
  for (int j = 0; j < q.cols(); ++j) {
    for (int i = 0; i < n; ++i) {
      double v = (scale * t.diag[i] - alpha) * q(i, j);
      if (i > 0) v += scale * t.off[i - 1] * q(i - 1, j);
      if (i + 1 < n) v += scale * t.off[i] * q(i + 1, j);
      out(i, j) = v;
    }
  }
  return out;
}

Mat truncated_f_of_tridiag(const TridiagSym& t, double scale, double alpha,
                           const std::vector<double>& coeff) {
  const int n = int(t.diag.size());
  Mat total = coeff[0] * Mat::Identity(n, n);
  Mat power = Mat::Identity(n, n);
  for (std::size_t k = 1; k < coeff.size(); ++k) {
    power = shifted_tridiag_product(t, scale, alpha, power);
    total += coeff[k] * power;
  }
  return total;
}

}  // namespace

TaylorCovariance taylor_covariance(const ThermalSpectral& thermal, const DisorderedChain& chain,
                                   int terms) {
  if (terms < 0) throw std::invalid_argument("taylor_covariance: negative term count");
  if (chain.n != thermal.n) throw std::invalid_argument("taylor_covariance: size mismatch");
  const int n = thermal.n;

  // expand about the midpoint alpha of [0, c0+1], where c0 bounds the spectra
  // of both quarter-scaled thermal matrices; the nearest singularity of the
  // spectral function sits at -pi^2, so a contour of radius alpha+8 is safe
  const double beta_max = thermal.beta_site.maxCoeff();
  const double c0 = beta_max * beta_max / chain.mass.minCoeff();
  const double alpha = 0.5 * (c0 + 1.0);
  const double rho = alpha + 8.0;
  const int quad_points = 2048;

  std::vector<double> coeff(std::size_t(terms) + 1, 0.0);
  for (int j = 0; j < quad_points; ++j) {
    const double theta = 2.0 * M_PI * j / quad_points;
    const std::complex<double> z(alpha + rho * std::cos(theta), rho * std::sin(theta));
    const std::complex<double> w = std::sqrt(z);
    const std::complex<double> fz = w / std::tanh(w);
    const std::complex<double> rot = std::polar(1.0, -theta);
    std::complex<double> cur = fz;
    for (int k = 0; k <= terms; ++k) {
      coeff[std::size_t(k)] += cur.real();
      cur *= rot;
    }
  }
  double rho_k = 1.0;
  for (int k = 0; k <= terms; ++k) {
    coeff[std::size_t(k)] /= quad_points * rho_k;
    rho_k *= rho;
  }

  TaylorCovariance out;
  out.bandwidth = terms;
  out.expansion_center = alpha;

  Mat fp = truncated_f_of_tridiag(thermal.a_p_beta, 0.25, alpha, coeff);
  out.c_pp = thermal.sqrt_m_over_beta.asDiagonal() * fp *
             thermal.sqrt_m_over_beta.asDiagonal();

  Mat fr = truncated_f_of_tridiag(thermal.a_r_beta, 0.25, alpha, coeff);
  Vec inv_sqrt_bond = thermal.beta_site.head(n - 1).cwiseSqrt().cwiseInverse();
  out.c_rr = inv_sqrt_bond.asDiagonal() * fr * inv_sqrt_bond.asDiagonal();
  return out;
}

ClusteringReport verify_clustering(const QuantumCovariance& qcov, const ThermalSpectral& thermal,
                                   const DisorderedChain& chain) {
  const int n = chain.n;
  if (thermal.n != n || qcov.c_pp.rows() != n)
    throw std::invalid_argument("verify_clustering: size mismatch");
  ClusteringReport rep;

  // restore the rank-one center-of-mass term so the momentum block is the
  // full spectral-function image, the object with exponential off-diagonal
  // decay; the dropped mode contributes a flat 1/n floor otherwise
  Vec w = thermal.sqrt_m_over_beta.cwiseAbs2();
  Mat pp = qcov.c_pp + (w * w.transpose()) / w.sum();

  // fit below the distance where entries sink into matrix-product roundoff
  std::vector<double> dist, val;
  for (int d = 1; d <= std::min(64, n - 1); ++d) {
    double peak = 0.0;
    for (int x = 0; x + d < n; ++x) peak = std::max(peak, std::abs(pp(x, x + d)));
    if (peak >= 1e-12) {
      dist.push_back(double(d));
      val.push_back(peak);
    }
  }
  if (dist.size() >= 2) {
    // least squares of log peak against distance; q is the per-site base
    const int m = int(dist.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < m; ++i) {
      const double x = dist[std::size_t(i)], y = std::log(val[std::size_t(i)]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
    }
    const double vx = sxx - sx * sx / m, vy = syy - sy * sy / m, cxy = sxy - sx * sy / m;
    rep.q_fit = std::exp(cxy / vx);
    rep.fit_r2 = (vy > 0.0) ? cxy * cxy / (vx * vy) : 1.0;
  }

  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const double d2 = double(x - y) * double(x - y);
      if (x != y) rep.sup_d2_pp = std::max(rep.sup_d2_pp, d2 * std::abs(pp(x, y)));
      if (x + 1 < n && y + 1 < n && x != y)
        rep.sup_d2_rr = std::max(rep.sup_d2_rr, d2 * std::abs(qcov.c_rr(x, y)));
      if (x + 1 < n) {
        const double mod = std::hypot(qcov.c_rp_re(x, y), qcov.c_rp_im(x, y));
        rep.sup_d2_rp = std::max(rep.sup_d2_rp, d2 * mod);
      }
    }

  // energy-energy covariance through the pairing rule: every term is a
  // product of two two-point entries, so its decay is the squared one
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      double cov = pp(x, y) * pp(x, y) / (2.0 * chain.mass[x] * chain.mass[y]);
      if (x + 1 < n && y + 1 < n) cov += 0.5 * qcov.c_rr(x, y) * qcov.c_rr(x, y);
      if (y + 1 < n)
        cov += (qcov.c_rp_re(y, x) * qcov.c_rp_re(y, x) -
                qcov.c_rp_im(y, x) * qcov.c_rp_im(y, x)) /
               (2.0 * chain.mass[x]);
      if (x + 1 < n)
        cov += (qcov.c_rp_re(x, y) * qcov.c_rp_re(x, y) -
                qcov.c_rp_im(x, y) * qcov.c_rp_im(x, y)) /
               (2.0 * chain.mass[y]);
      rep.sup_d2_energy =
          std::max(rep.sup_d2_energy, double(x - y) * double(x - y) * std::abs(cov));
    }

  rep.odd_moment = 0.0;  // no odd cumulants exist in a quasi-free state
  return rep;
}

ThermalEnergyProfile thermal_energy_profile(const MassLaw& law, const Profile& beta, int n,
                                            int n_seeds, std::uint64_t seed_base) {
  if (n_seeds < 8) throw std::invalid_argument("thermal_energy_profile: need at least 8 seeds");
  MacroProfiles prof;
  prof.beta = beta;

  Mat per_seed(n, n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    auto chain = sample_masses(n, law, seed_base + std::uint64_t(s));
    auto thermal = build_thermal(chain, prof);
    // only diagonals of the covariance are needed for the energy profile
    for (int x = 0; x < n; ++x) {
      double cpp = 0.0;
      for (int k = 1; k < n; ++k) {
        const double w = f_spec(thermal.gamma[k] * thermal.gamma[k] / 4.0);
        cpp += w * thermal.psi(x, k) * thermal.psi(x, k);
      }
      cpp *= chain.mass[x] / thermal.beta_site[x];
      double b = cpp / chain.mass[x];
      if (x + 1 < n) {
        double crr = 0.0;
        for (int k = 1; k < n; ++k) {
          const double w = f_spec(thermal.gamma[k] * thermal.gamma[k] / 4.0);
          crr += w * thermal.psi_r(x, k - 1) * thermal.psi_r(x, k - 1);
        }
        b += crr / thermal.beta_site[x];
      }
      per_seed(x, s) = 0.5 * b;
    }
  }

  ThermalEnergyProfile out;
  out.n = n;
  out.n_seeds = n_seeds;
  out.mean = per_seed.rowwise().mean();

  const int resamples = 200;
  StreamRng rng(seed_base, 0x626f6f74u, 0);
  Mat boot(n, resamples);
  for (int b = 0; b < resamples; ++b) {
    Vec acc = Vec::Zero(n);
    for (int s = 0; s < n_seeds; ++s) {
      int pick = std::min(n_seeds - 1, int(rng.uniform() * n_seeds));
      acc += per_seed.col(pick);
    }
    boot.col(b) = acc / n_seeds;
  }
  out.err.resize(n);
  for (int x = 0; x < n; ++x) {
    const double m = boot.row(x).mean();
    out.err[x] = std::sqrt((boot.row(x).array() - m).square().sum() / (resamples - 1));
  }
  return out;
}

Profile ThermalEnergyProfile::as_profile() const {
  std::vector<double> table(std::size_t(n) + 1);
  table[0] = mean[0];  // constant continuation to y = 0
  for (int x = 0; x < n; ++x) table[std::size_t(x) + 1] = mean[x];
  return Profile::tabulated(std::move(table));
}

}  // namespace chainlab
