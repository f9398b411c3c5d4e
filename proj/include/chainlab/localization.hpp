#pragma once

#include <vector>

#include "chainlab/classical_state.hpp"
#include "chainlab/spectral.hpp"

namespace chainlab {

// First mode index strictly above n^{1-exponent}. Modes below it are the
// hydrodynamic (low) set, modes from it upward the localized (high) set.
int high_mode_cut(int n, double exponent);

struct PairSpec {
  int x = 0, y = 0;
  int distance = 0;
};

// 8 base sites at multiples of n/16 paired with a geometric distance ladder
// {1, 2, 4, ..., n/4}, keeping the scan O(n log n) per seed.
std::vector<PairSpec> ladder_pairs(int n);

enum class CorrelatorBasis { Momentum, Elongation };

struct ExpFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  int points = 0;
};

// Least squares of log(value) against distance; values must be positive.
ExpFit fit_log_linear(const std::vector<double>& distances, const std::vector<double>& values);

struct LocalizationScan {
  int n = 0;
  int n_seeds = 0;
  double alpha = 0.0;
  CorrelatorBasis basis = CorrelatorBasis::Momentum;
  std::vector<PairSpec> pairs;
  Vec correlator;                      // disorder-averaged value per pair
  std::vector<double> fit_distances;   // ladder distances inside [n^{2 alpha}, n/4]
  std::vector<double> fit_means;       // per-distance averages on that window
  ExpFit fit;
};

// Streams one spectral decomposition at a time so an ensemble never has to
// be held in memory at once. Momentum basis accumulates
// sum_{k high} |phi~_x phi~_y|; elongation basis uses the bond vectors and
// rescales each seed by its slowest high-mode frequency.
class CorrelatorAccumulator {
 public:
  CorrelatorAccumulator(int n, double alpha, std::vector<PairSpec> pairs,
                        CorrelatorBasis basis = CorrelatorBasis::Momentum);
  void add(const SpectralData& spec);
  LocalizationScan finish() const;  // needs at least 8 accumulated seeds

 private:
  int n_;
  double alpha_;
  CorrelatorBasis basis_;
  std::vector<PairSpec> pairs_;
  Vec sum_;
  int n_seeds_ = 0;
};

LocalizationScan high_mode_correlator(const std::vector<const SpectralData*>& ensemble,
                                      double alpha, const std::vector<PairSpec>& pairs,
                                      CorrelatorBasis basis = CorrelatorBasis::Momentum);

// Largest inverse frequency over the high-mode set (the slowest mode the
// hydrodynamic argument must control). Optionally reports which mode it was.
double min_freq_value(const SpectralData& spec, double gamma, int* k_star_out = nullptr);

struct OffdiagMass {
  double u_less = 0.0;     // (1/n^2) sum over |x-y| <= 2 n^theta of |C^high_pp,xy| / sqrt(mx my)
  double u_greater = 0.0;  // same sum over the complementary far pairs
};

OffdiagMass high_mode_offdiag_mass(const GaussianChainState& state, const SpectralData& spec,
                                   double gamma, double theta);

}  // namespace chainlab
