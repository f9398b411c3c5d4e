#include "chainlab/euler_macro.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace chainlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double MacroFields::r_at(double y) const {
  if (y == 0.0 || y == 1.0) return 0.0;  // pinned boundary, exact
  double acc = 0.0;
  for (int j = 1; j < n_modes(); ++j) acc += sine_coeffs[j] * std::sin(j * kPi * y);
  return acc;
}

double MacroFields::p_at(double y) const {
  double acc = cosine_coeffs[0];
  for (int j = 1; j < n_modes(); ++j) acc += cosine_coeffs[j] * std::cos(j * kPi * y);
  return acc;
}

double MacroFields::dr_dy(double y) const {
  double acc = 0.0;
  for (int j = 1; j < n_modes(); ++j) acc += sine_coeffs[j] * j * kPi * std::cos(j * kPi * y);
  return acc;
}

double MacroFields::dp_dy(double y) const {
  double acc = 0.0;
  for (int j = 1; j < n_modes(); ++j) acc -= cosine_coeffs[j] * j * kPi * std::sin(j * kPi * y);
  return acc;
}

MacroFields solve_macro(const MacroProfiles& profiles, double mean_mass, double t, int n_modes,
                        int grid_points, const std::optional<Profile>& bbar) {
  if (n_modes < 64) throw std::invalid_argument("solve_macro: need at least 64 modes");
  if (grid_points < 2) throw std::invalid_argument("solve_macro: need at least 2 grid points");
  if (!(mean_mass > 0.0)) throw std::invalid_argument("solve_macro: mean mass must be positive");
  profiles.validate(bbar.has_value());

  MacroFields f;
  f.time = t;
  f.mean_mass = mean_mass;
  f.grid = Vec::LinSpaced(grid_points, 0.0, 1.0);

  Vec r0 = Vec::Zero(n_modes), p0 = Vec::Zero(n_modes);
  p0[0] = integrate_fn([&](double y) { return profiles.pbar(y); });
  for (int j = 1; j < n_modes; ++j) {
    r0[j] = 2.0 * integrate_fn([&](double y) { return profiles.rbar(y) * std::sin(j * kPi * y); });
    p0[j] = 2.0 * integrate_fn([&](double y) { return profiles.pbar(y) * std::cos(j * kPi * y); });
  }

  const double root_m = std::sqrt(mean_mass);
  f.sine_coeffs.resize(n_modes);
  f.cosine_coeffs.resize(n_modes);
  for (int j = 0; j < n_modes; ++j) {
    const double angle = j * kPi * t / root_m;
    const double c = std::cos(angle), s = std::sin(angle);
    f.sine_coeffs[j] = c * r0[j] - s * p0[j] / root_m;
    f.cosine_coeffs[j] = c * p0[j] + s * root_m * r0[j];
  }
  f.sine_coeffs[0] = 0.0;

  f.fr.resize(grid_points);
  f.fp.resize(grid_points);
  f.fe.resize(grid_points);
  f.slaving_const.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double y = f.grid[i];
    f.fr[i] = f.r_at(y);
    f.fp[i] = f.p_at(y);
    f.slaving_const[i] = bbar ? (*bbar)(y) : 1.0 / profiles.beta(y);
    f.fe[i] = f.fp[i] * f.fp[i] / (2.0 * mean_mass) + 0.5 * f.fr[i] * f.fr[i] + f.slaving_const[i];
  }
  return f;
}

PdeResiduals pde_residuals(const MacroFields& before, const MacroFields& after) {
  if (before.grid_points() != after.grid_points() || before.n_modes() != after.n_modes())
    throw std::invalid_argument("pde_residuals: snapshots use different discretizations");
  if (before.mean_mass != after.mean_mass)
    throw std::invalid_argument("pde_residuals: snapshots use different mean masses");
  const double dt = after.time - before.time;
  if (!(dt > 0.0)) throw std::invalid_argument("pde_residuals: snapshots must be time-ordered");

  const double m = before.mean_mass;
  PdeResiduals res;
  for (int i = 0; i < before.grid_points(); ++i) {
    const double y = before.grid[i];
    const double dr = 0.5 * (before.dr_dy(y) + after.dr_dy(y));
    const double dp = 0.5 * (before.dp_dy(y) + after.dp_dy(y));
    const double rmid = 0.5 * (before.fr[i] + after.fr[i]);
    const double pmid = 0.5 * (before.fp[i] + after.fp[i]);
    res.res_r = std::max(res.res_r, std::abs((after.fr[i] - before.fr[i]) / dt - dp / m));
    res.res_p = std::max(res.res_p, std::abs((after.fp[i] - before.fp[i]) / dt - dr));
    res.res_e = std::max(res.res_e,
                         std::abs((after.fe[i] - before.fe[i]) / dt - (rmid * dp + pmid * dr) / m));
  }
  return res;
}

void save_macro_csv(const MacroFields& fields, std::ostream& out) {
  out << "y,fr,fp,fe,t\n";
  char line[160];
  for (int i = 0; i < fields.grid_points(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", fields.grid[i],
                  fields.fr[i], fields.fp[i], fields.fe[i], fields.time);
    out << line;
  }
}

}  // namespace chainlab
