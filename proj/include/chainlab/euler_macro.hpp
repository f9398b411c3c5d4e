#pragma once

#include <iosfwd>
#include <optional>

#include "chainlab/chain.hpp"
#include "chainlab/profiles.hpp"

namespace chainlab {

// Snapshot of the macroscopic wave system at one time. Elongation is a sine
// series (pinned at both ends), momentum a cosine series; mode j of each
// rotates at speed j*pi/sqrt(mean_mass). sine_coeffs[0] is identically zero,
// mirroring the microscopic convention that the elongation has no zero mode.
// Energy is slaved: fe = fp^2/(2 m) + fr^2/2 + slaving_const.
struct MacroFields {
  double time = 0.0;
  double mean_mass = 1.0;
  Vec grid;           // uniform y-points including both endpoints
  Vec fr, fp, fe;     // fields on the grid at `time`
  Vec sine_coeffs;    // elongation modes j = 0..N-1 (entry 0 always zero)
  Vec cosine_coeffs;  // momentum modes j = 0..N-1 (entry 0 is the mean)
  Vec slaving_const;  // thermal background C(y) on the grid, time-independent

  int n_modes() const { return int(sine_coeffs.size()); }
  int grid_points() const { return int(grid.size()); }

  // series evaluations at arbitrary y, independent of the stored grid
  double r_at(double y) const;
  double p_at(double y) const;
  double dr_dy(double y) const;
  double dp_dy(double y) const;
};

// Solves the wave system exactly: expands the initial profiles, rotates each
// mode pair through angle j*pi*t/sqrt(mean_mass), and evaluates on the grid.
// The thermal background is 1/beta(y) unless an energy profile bbar is given
// (then bbar(y), as produced by the quantum thermal-energy estimate).
MacroFields solve_macro(const MacroProfiles& profiles, double mean_mass, double t,
                        int n_modes = 128, int grid_points = 513,
                        const std::optional<Profile>& bbar = std::nullopt);

struct PdeResiduals {
  double res_r = 0.0;  // d/dt fr - (1/m) d/dy fp
  double res_p = 0.0;  // d/dt fp - d/dy fr
  double res_e = 0.0;  // d/dt fe - (1/m) d/dy (fr fp)
};

// Max-norm residuals of the three conservation laws, from two snapshots at
// nearby times: centered time difference against the series-exact spatial
// derivative averaged over the pair.
PdeResiduals pde_residuals(const MacroFields& before, const MacroFields& after);

void save_macro_csv(const MacroFields& fields, std::ostream& out);

}  // namespace chainlab
