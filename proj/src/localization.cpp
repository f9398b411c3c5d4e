#include "chainlab/localization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "chainlab/dynamics.hpp"

namespace chainlab {

int high_mode_cut(int n, double exponent) {
  const double cut = std::pow(double(n), 1.0 - exponent);
  int c = 0;
  while (c < n && double(c) <= cut) ++c;
  return c;
}

std::vector<PairSpec> ladder_pairs(int n) {
  if (n < 32) throw std::invalid_argument("ladder_pairs: chain too short for the distance ladder");
  std::vector<PairSpec> pairs;
  for (int b = 0; b < 8; ++b) {
    const int x = (b + 1) * n / 16;
    for (int d = 1; d <= n / 4; d *= 2) pairs.push_back({x, x + d, d});
  }
  return pairs;
}

ExpFit fit_log_linear(const std::vector<double>& distances, const std::vector<double>& values) {
  if (distances.size() != values.size() || distances.size() < 2)
    throw std::invalid_argument("fit_log_linear: need matching lists with at least two points");
  const int m = int(distances.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < m; ++i) {
    if (!(values[std::size_t(i)] > 0.0))
      throw std::invalid_argument("fit_log_linear: values must be positive");
    const double x = distances[std::size_t(i)], y = std::log(values[std::size_t(i)]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vx = sxx - sx * sx / m, vy = syy - sy * sy / m, cxy = sxy - sx * sy / m;
  ExpFit fit;
  fit.points = m;
  fit.slope = cxy / vx;
  fit.intercept = (sy - fit.slope * sx) / m;
  fit.r2 = (vy > 0.0) ? (cxy * cxy) / (vx * vy) : 1.0;
  return fit;
}

CorrelatorAccumulator::CorrelatorAccumulator(int n, double alpha, std::vector<PairSpec> pairs,
                                             CorrelatorBasis basis)
    : n_(n), alpha_(alpha), basis_(basis), pairs_(std::move(pairs)) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("correlator: alpha must lie in (0, 1/2)");
  if (high_mode_cut(n, alpha) >= n)
    throw std::invalid_argument("correlator: no modes above n^{1-alpha}");
  const int top = (basis == CorrelatorBasis::Momentum) ? n - 1 : n - 2;
  for (const auto& p : pairs_) {
    if (p.x < 0 || p.y < 0 || p.x > top || p.y > top || p.distance <= 0)
      throw std::invalid_argument("correlator: pair out of range");
  }
  sum_ = Vec::Zero(long(pairs_.size()));
}

void CorrelatorAccumulator::add(const SpectralData& spec) {
  if (spec.n != n_) throw std::invalid_argument("correlator: spectral size mismatch");
  const int kcut = high_mode_cut(n_, alpha_);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    double acc = 0.0;
    if (basis_ == CorrelatorBasis::Momentum) {
      for (int k = kcut; k < n_; ++k)
        acc += std::abs(spec.phi_p_tilde(p.x, k) * spec.phi_p_tilde(p.y, k));
    } else {
      for (int k = kcut; k < n_; ++k)
        acc += std::abs(spec.phi_r(p.x, k - 1) * spec.phi_r(p.y, k - 1));
      acc *= spec.omega[kcut];  // compensate one inverse-frequency factor
    }
    sum_[long(i)] += acc;
  }
  ++n_seeds_;
}

LocalizationScan CorrelatorAccumulator::finish() const {
  if (n_seeds_ < 8) throw std::runtime_error("correlator: need at least 8 seeds");
  LocalizationScan scan;
  scan.n = n_;
  scan.n_seeds = n_seeds_;
  scan.alpha = alpha_;
  scan.basis = basis_;
  scan.pairs = pairs_;
  scan.correlator = sum_ / double(n_seeds_);

  // distance window [n^{2 alpha}, n/4]: inside the localization length the
  // decay has not set in yet, so those rungs are excluded from the fit
  const double dmin = std::pow(double(n_), 2.0 * alpha_);
  const double dmax = double(n_) / 4.0;
  std::map<int, std::pair<double, int>> by_distance;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const int d = pairs_[i].distance;
    if (d + 1e-12 < dmin || double(d) > dmax + 1e-12) continue;
    auto& slot = by_distance[d];
    slot.first += scan.correlator[long(i)];
    slot.second += 1;
  }
  for (const auto& [d, slot] : by_distance) {
    scan.fit_distances.push_back(double(d));
    scan.fit_means.push_back(slot.first / slot.second);
  }
  // a fit needs at least two rungs inside the window; otherwise leave points=0
  if (scan.fit_distances.size() >= 2) scan.fit = fit_log_linear(scan.fit_distances, scan.fit_means);
  return scan;
}

LocalizationScan high_mode_correlator(const std::vector<const SpectralData*>& ensemble,
                                      double alpha, const std::vector<PairSpec>& pairs,
                                      CorrelatorBasis basis) {
  if (ensemble.empty()) throw std::invalid_argument("high_mode_correlator: empty ensemble");
  CorrelatorAccumulator acc(ensemble.front()->n, alpha, pairs, basis);
  for (const auto* spec : ensemble) acc.add(*spec);
  return acc.finish();
}

double min_freq_value(const SpectralData& spec, double gamma, int* k_star_out) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("min_freq_value: gamma must lie in (0, 1)");
  int k = std::min(high_mode_cut(spec.n, gamma), spec.n - 1);
  if (k_star_out) *k_star_out = k;
  const double w = spec.omega[k];
  if (!(w > 0.0)) throw std::runtime_error("min_freq_value: degenerate slow mode");
  return 1.0 / w;
}

OffdiagMass high_mode_offdiag_mass(const GaussianChainState& state, const SpectralData& spec,
                                   double gamma, double theta) {
  if (!(gamma > 0.0 && 2.0 * gamma < theta && theta < 1.0))
    throw std::invalid_argument("high_mode_offdiag_mass: need 0 < 2 gamma < theta < 1");
  const int n = spec.n;
  auto split = mode_split_covariance(state, spec, gamma);
  const double band = 2.0 * std::pow(double(n), theta);
  OffdiagMass out;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const double v =
          std::abs(split.pp_high(x, y)) / (spec.sqrt_mass[x] * spec.sqrt_mass[y]);
      if (std::abs(x - y) <= band)
        out.u_less += v;
      else
        out.u_greater += v;
    }
  }
  out.u_less /= double(n) * n;
  out.u_greater /= double(n) * n;
  return out;
}

}  // namespace chainlab
