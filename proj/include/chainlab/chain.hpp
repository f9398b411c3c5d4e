#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "chainlab/rng.hpp"

namespace chainlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Law of the i.i.d. masses, supported on [m_minus, m_plus] with m_minus > 0.
// Beta22 is the default: a smooth density vanishing at the support endpoints.
struct MassLaw {
  enum class Kind { UniformInterval, Beta22, Constant };

  Kind kind = Kind::Beta22;
  double m_minus = 1.0;
  double m_plus = 2.0;

  double mean() const;  // analytic mean of the law
  void validate() const;
  std::string name() const;
  std::uint64_t tag() const;  // stable id used by cache keys

  static MassLaw beta22(double lo = 1.0, double hi = 2.0);
  static MassLaw uniform(double lo, double hi);
  static MassLaw constant(double m);  // clean chain, every mass equal
};

struct DisorderedChain {
  int n = 0;
  std::uint64_t seed = 0;
  MassLaw law;
  Vec mass;       // n entries inside [m_minus, m_plus]
  Vec sqrt_mass;  // cached sqrt(mass)
  double mean_mass = 0.0;  // law mean, not the empirical mean

  void validate() const;
};

// Symmetric tridiagonal matrix, stored by diagonals.
struct TridiagSym {
  Vec diag;  // size n
  Vec off;   // size n-1, off[i] couples i and i+1

  int size() const { return static_cast<int>(diag.size()); }
  Mat dense() const;
  Vec apply(const Vec& v) const;
  double max_abs() const;  // Gershgorin bound on the spectral radius
};

// n i.i.d. mass draws; the same (n, law, seed) always gives the same vector.
DisorderedChain sample_masses(int n, const MassLaw& law, std::uint64_t seed);

// A_p = M^{-1/2} (-Lap) M^{-1/2} with free ends: diag d_x/m_x where d_x = 2 in
// the bulk and 1 at both ends, offdiag -1/sqrt(m_x m_{x+1}). Positive
// semidefinite with kernel spanned by sqrt(m).
TridiagSym build_ap(const DisorderedChain& chain);

// A_r = -grad_plus M^{-1} grad_minus on the n-1 bond variables:
// diag 1/m_y + 1/m_{y+1}, offdiag -1/m_{y+1}. Same nonzero spectrum as A_p.
TridiagSym build_ar(const DisorderedChain& chain);

// Text serialization: header (n, law, seed) then one mass per line with 17
// significant digits, so a chain replays exactly across implementations.
void save_chain(const DisorderedChain& chain, std::ostream& os);
DisorderedChain load_chain(std::istream& is);
void save_chain_file(const DisorderedChain& chain, const std::string& path);
DisorderedChain load_chain_file(const std::string& path);

}  // namespace chainlab
