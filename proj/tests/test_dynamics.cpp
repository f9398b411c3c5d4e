#include "doctest.h"

#include <cmath>
#include <vector>

#include "chainlab/dynamics.hpp"

using namespace chainlab;

namespace {

double total_energy(const Vec& r, const Vec& p, const DisorderedChain& chain) {
  double e = 0.0;
  for (int x = 0; x < chain.n; ++x) e += p[x] * p[x] / (2.0 * chain.mass[x]);
  e += 0.5 * r.squaredNorm();
  return e;
}

Mat forward_diff(int n) {
  Mat d = Mat::Zero(n - 1, n);
  for (int y = 0; y + 1 < n; ++y) {
    d(y, y) = -1.0;
    d(y, y + 1) = 1.0;
  }
  return d;
}

}  // namespace

TEST_CASE("zero time is the identity for samples and covariance") {
  auto chain = sample_masses(64, MassLaw::beta22(1.0, 2.0), 1);
  auto spec = build_spectral(chain);
  auto map = make_evolution_map(spec, 0.0);

  StreamRng rng(4, 0, 0);
  Vec r0(63), p0(64);
  for (int i = 0; i < 63; ++i) r0[i] = rng.normal();
  for (int i = 0; i < 64; ++i) p0[i] = rng.normal();
  auto [r1, p1] = evolve_sample(r0, p0, map);
  CHECK((r1 - r0).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((p1 - p0).cwiseAbs().maxCoeff() < 1e-13);

  MacroProfiles prof;
  prof.beta = Profile::linear(0.9, 1.1);
  auto st = local_gibbs_moments(chain, prof);
  auto st0 = evolve_covariance(st, map);
  CHECK((st0.c_pp - st.c_pp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a single excited mode rotates onto the bond basis") {
  auto chain = sample_masses(96, MassLaw::beta22(1.0, 2.0), 7);
  auto spec = build_spectral(chain);
  const int k = 17;
  const double tau = 3.31;
  auto map = make_evolution_map(spec, tau);

  Vec p0 = spec.sqrt_mass.asDiagonal() * spec.phi_p.col(k);
  auto [rt, pt] = evolve_sample(Vec::Zero(95), p0, map);
  double c = std::cos(spec.omega[k] * tau), s = std::sin(spec.omega[k] * tau);
  CHECK((pt - c * p0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rt - s * spec.phi_r.col(k - 1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("energy and momentum are conserved over a hydrodynamic time") {
  const int n = 512;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 11);
  auto spec = build_spectral(chain);

  StreamRng rng(21, 0, 0);
  Vec r0(n - 1), p0(n);
  for (int i = 0; i + 1 < n; ++i) r0[i] = rng.normal();
  for (int i = 0; i < n; ++i) p0[i] = rng.normal();
  double e0 = total_energy(r0, p0, chain);
  double ptot0 = p0.sum();

  for (double t : {0.25, 0.5, 1.0}) {
    auto map = make_evolution_map(spec, n * t);
    auto [rt, pt] = evolve_sample(r0, p0, map);
    CHECK(std::abs(total_energy(rt, pt, chain) - e0) / e0 < 1e-10);
    CHECK(std::abs(pt.sum() - ptot0) < 1e-10);
  }
}

TEST_CASE("equilibrium covariance is stationary") {
  const int n = 256;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 3);
  auto spec = build_spectral(chain);
  auto st = local_gibbs_moments(chain, MacroProfiles::equilibrium(1.3));

  for (double t : {0.25, 1.0}) {
    auto map = make_evolution_map(spec, n * t);
    auto evolved = evolve_covariance(st, map);
    CHECK((evolved.c_pp - st.c_pp).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((evolved.c_rr - st.c_rr).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(evolved.c_rp_re.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(evolved.mean_p.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("evolved covariance matches Monte Carlo moments within 5 sigma") {
  const int n = 128;
  const int reps = 10000;
  const double t = 0.3;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 9);
  auto spec = build_spectral(chain);
  MacroProfiles prof;
  prof.beta = Profile::linear(0.8, 1.2);
  prof.pbar = Profile::cosine(0.3, 1);
  prof.rbar = Profile::sine(0.2, 1);
  auto st0 = local_gibbs_moments(chain, prof);
  auto map = make_evolution_map(spec, n * t);
  auto st = evolve_covariance(st0, map);

  Mat sum_pp = Mat::Zero(n, n);
  Vec sum_p = Vec::Zero(n);
  Mat sum_rp = Mat::Zero(n - 1, n);
  for (int rep = 0; rep < reps; ++rep) {
    StreamRng rng(1234, 0, std::uint64_t(rep));
    auto [r0, p0] = sample_state(st0, rng);
    auto [rt, pt] = evolve_sample(r0, p0, map);
    sum_p += pt;
    Vec dp = pt - st.mean_p;
    Vec dr = rt - st.mean_r;
    sum_pp += dp * dp.transpose();
    sum_rp += dr * dp.transpose();
  }
  sum_p /= reps;
  sum_pp /= reps;
  sum_rp /= reps;

  for (int x = 0; x < n; x += 13) {
    double sd = std::sqrt(st.c_pp(x, x) / reps);
    CHECK(std::abs(sum_p[x] - st.mean_p[x]) < 5.0 * sd);
    for (int y = 0; y < n; y += 13) {
      double var_est = (st.c_pp(x, x) * st.c_pp(y, y) + st.c_pp(x, y) * st.c_pp(x, y)) / reps;
      CHECK(std::abs(sum_pp(x, y) - st.c_pp(x, y)) < 5.0 * std::sqrt(var_est));
    }
  }
  for (int y = 0; y + 1 < n; y += 17) {
    for (int x = 0; x < n; x += 17) {
      double var_est = (st.c_rr(y, y) * st.c_pp(x, x) + st.c_rp_re(y, x) * st.c_rp_re(y, x)) / reps;
      CHECK(std::abs(sum_rp(y, x) - st.c_rp_re(y, x)) < 5.0 * std::sqrt(var_est));
    }
  }
}

TEST_CASE("momentum variances stay below the initial temperature cap") {
  const int n = 256;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 5);
  auto spec = build_spectral(chain);
  MacroProfiles prof;
  prof.beta = Profile::linear(0.9, 1.4);
  auto st0 = local_gibbs_moments(chain, prof);
  double cap = 1.0 / 0.9 + 1e-9;
  for (double t : {0.1, 0.5, 1.0}) {
    auto st = evolve_covariance(st0, make_evolution_map(spec, n * t));
    for (int x = 0; x < n; ++x) CHECK(st.c_pp(x, x) / chain.mass[x] <= cap);
  }
}

TEST_CASE("site-space flow preserves the canonical pairing") {
  const int n = 96;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 13);
  auto spec = build_spectral(chain);
  auto map = make_evolution_map(spec, 37.7);

  const int dim = 2 * n - 1;
  Mat l(dim, dim);
  for (int j = 0; j < dim; ++j) {
    Vec r0 = Vec::Zero(n - 1), p0 = Vec::Zero(n);
    if (j < n - 1)
      r0[j] = 1.0;
    else
      p0[j - (n - 1)] = 1.0;
    auto [rt, pt] = evolve_sample(r0, p0, map);
    l.col(j).head(n - 1) = rt;
    l.col(j).tail(n) = pt;
  }
  Mat d = forward_diff(n);
  Mat jmat = Mat::Zero(dim, dim);
  jmat.topRightCorner(n - 1, n) = d;
  jmat.bottomLeftCorner(n, n - 1) = -d.transpose();
  CHECK((l * jmat * l.transpose() - jmat).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("frozen equilibrium functional values") {
  const int n = 200;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 2);
  auto st = local_gibbs_moments(chain, MacroProfiles::equilibrium(1.0));
  Profile one = Profile::constant(1.0);

  CHECK(empirical_mean_functional(one, Field::P, st, chain) == doctest::Approx(0.0));
  CHECK(empirical_mean_functional(one, Field::E, st, chain) ==
        doctest::Approx(1.0 - 0.5 / n).epsilon(1e-13));

  double pn = quad_var(one, Field::P, st);
  CHECK(pn == doctest::Approx(chain.mass.sum() / (double(n) * n)).epsilon(1e-13));
  double rn = quad_var(one, Field::R, st);
  CHECK(rn == doctest::Approx(double(n - 1) / (double(n) * n)).epsilon(1e-13));
  double en = quad_var_energy(one, st, chain);
  CHECK(en == doctest::Approx((n - 0.5) / (double(n) * n)).epsilon(1e-13));
}

TEST_CASE("riemann sums of the mean layer approach their integrals") {
  const int n = 4096;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 19);
  MacroProfiles prof;
  prof.rbar = Profile::sine(1.0, 1);
  auto st = local_gibbs_moments(chain, prof);
  Profile f = Profile::sine(1.0, 1);
  // (1/n) sum sin^2(pi x/n) -> 1/2
  CHECK(empirical_mean_functional(f, Field::R, st, chain) == doctest::Approx(0.5).epsilon(2.0 / n));
}

TEST_CASE("energy fluctuation formula agrees with Monte Carlo") {
  const int n = 64;
  const int reps = 20000, batches = 20;
  const double t = 0.3;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 15);
  auto spec = build_spectral(chain);
  MacroProfiles prof;
  prof.beta = Profile::linear(0.9, 1.1);
  prof.pbar = Profile::cosine(0.3, 1);
  prof.rbar = Profile::sine(0.2, 1);
  auto st0 = local_gibbs_moments(chain, prof);
  auto map = make_evolution_map(spec, n * t);
  auto st = evolve_covariance(st0, map);
  Profile f = Profile::sine(1.0, 1);
  double predicted = quad_var_energy(f, st, chain);

  Vec fs(n);
  for (int i = 0; i < n; ++i) fs[i] = f(double(i + 1) / n);
  Vec mean_e(n);
  for (int x = 0; x < n; ++x) {
    mean_e[x] = (st.mean_p[x] * st.mean_p[x] + st.c_pp(x, x)) / (2.0 * chain.mass[x]);
    if (x + 1 < n) mean_e[x] += (st.mean_r[x] * st.mean_r[x] + st.c_rr(x, x)) / 2.0;
  }

  std::vector<double> batch_mean(batches, 0.0);
  const int per = reps / batches;
  for (int b = 0; b < batches; ++b) {
    for (int i = 0; i < per; ++i) {
      StreamRng rng(555, 0, std::uint64_t(b * per + i));
      auto [r0, p0] = sample_state(st0, rng);
      auto [rt, pt] = evolve_sample(r0, p0, map);
      double acc = 0.0;
      for (int x = 0; x < n; ++x) {
        double e = pt[x] * pt[x] / (2.0 * chain.mass[x]);
        if (x + 1 < n) e += rt[x] * rt[x] / 2.0;
        acc += fs[x] * (e - mean_e[x]);
      }
      acc /= n;
      batch_mean[std::size_t(b)] += acc * acc;
    }
    batch_mean[std::size_t(b)] /= per;
  }
  double mc = 0.0, var = 0.0;
  for (double bm : batch_mean) mc += bm;
  mc /= batches;
  for (double bm : batch_mean) var += (bm - mc) * (bm - mc);
  var /= (batches - 1);
  double stderr_mc = std::sqrt(var / batches);
  CHECK(std::abs(mc - predicted) < 5.0 * stderr_mc);
}

TEST_CASE("mode split reassembles the full covariance") {
  const int n = 256;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 23);
  auto spec = build_spectral(chain);
  MacroProfiles prof;
  prof.beta = Profile::linear(0.9, 1.1);
  auto st0 = local_gibbs_moments(chain, prof);
  auto st = evolve_covariance(st0, make_evolution_map(spec, n * 0.4));

  auto split = mode_split_covariance(st, spec, 0.3);
  CHECK((split.pp_low + split.pp_high + split.pp_cross - st.c_pp).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((split.rr_low + split.rr_high + split.rr_cross - st.c_rr).cwiseAbs().maxCoeff() < 1e-10);

  // low-mode mass obeys the exact counting bound |I~|/(n beta_min)
  double bound = double(split.low_count) / (double(n) * 0.9) + 1e-12;
  CHECK(split.low_p_mode_mass <= bound);
  CHECK(split.low_r_mode_mass <= bound);

  CHECK_THROWS(mode_split_covariance(st, spec, 0.7));

  // tiny n with gamma near 1/2: every mode is low, high blocks vanish
  auto tiny_chain = sample_masses(4, MassLaw::beta22(1.0, 2.0), 1);
  auto tiny_spec = build_spectral(tiny_chain);
  auto tiny_st = local_gibbs_moments(tiny_chain, MacroProfiles::equilibrium(1.0));
  auto tiny = mode_split_covariance(tiny_st, tiny_spec, 0.05);
  CHECK(tiny.low_count == 4);
  CHECK(tiny.pp_high.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("total mean momentum and energy are conserved by the state flow") {
  const int n = 128;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 29);
  auto spec = build_spectral(chain);
  MacroProfiles prof;
  prof.beta = Profile::linear(0.8, 1.3);
  prof.pbar = Profile::cosine(0.3, 1);
  prof.rbar = Profile::sine(0.2, 1);
  auto st0 = local_gibbs_moments(chain, prof);
  Profile one = Profile::constant(1.0);
  double p_tot0 = st0.mean_p.sum();
  double e_tot0 = empirical_mean_functional(one, Field::E, st0, chain) * n;

  for (double t : {0.2, 0.7}) {
    auto st = evolve_covariance(st0, make_evolution_map(spec, n * t));
    CHECK(std::abs(st.mean_p.sum() - p_tot0) < 1e-10);
    double e_tot = empirical_mean_functional(one, Field::E, st, chain) * n;
    CHECK(std::abs(e_tot - e_tot0) / std::abs(e_tot0) < 1e-10);
  }
}

TEST_CASE("synthetic quasi-free state keeps its commutator block invariant") {
  const int n = 96;
  auto chain = sample_masses(n, MassLaw::beta22(1.0, 2.0), 31);
  auto spec = build_spectral(chain);
  MacroProfiles prof;
  prof.beta = Profile::linear(0.9, 1.1);
  auto st = local_gibbs_moments(chain, prof);
  st.flavor = StateFlavor::QuantumQuasiFree;
  st.c_rp_im = 0.5 * forward_diff(n);

  auto evolved = evolve_covariance(st, make_evolution_map(spec, n * 0.6));
  CHECK((evolved.c_rp_im - st.c_rp_im).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(evolved.c_rp_im.rows() == n - 1);

  // evolving twice composes cleanly and still keeps the commutators
  auto twice = evolve_covariance(evolved, make_evolution_map(spec, n * 0.2));
  CHECK((twice.c_rp_im - st.c_rp_im).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("functional results validate their own invariants") {
  FunctionalResult ok{"one", FunctionalKind::QuadVarP, 0.25, 64, 0.5, 1};
  CHECK_NOTHROW(ok.validate());
  FunctionalResult neg{"one", FunctionalKind::QuadVarE, -1e-3, 64, 0.5, 1};
  CHECK_THROWS(neg.validate());
  CHECK(std::string(functional_kind_name(FunctionalKind::MeanE)) == "mean_e");
}
