#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace chainlab {

// Scalar field on [0,1], used for the inverse-temperature, momentum and
// elongation profiles and for test functions. Presets keep configs
// serializable; arbitrary shapes enter through the tabulated kind
// (uniform grid, linear interpolation, at least 128 points).
struct Profile {
  enum class Kind { Zero, Constant, Linear, Cosine, Sine, Bump, Tabulated };

  Kind kind = Kind::Zero;
  double a = 0.0;   // Constant: value; Linear: value at y=0; Cosine/Sine/Bump: amplitude
  double b = 0.0;   // Linear: value at y=1
  int j = 1;        // Cosine/Sine: wave number, fields cos(j pi y) / sin(j pi y)
  std::vector<double> table;  // Tabulated: values on the uniform grid over [0,1]

  double operator()(double y) const;
  double min_on_grid(int pts = 4096) const;
  double max_on_grid(int pts = 4096) const;

  static Profile zero();
  static Profile constant(double c);
  static Profile linear(double at0, double at1);
  static Profile cosine(double amp, int j = 1);
  static Profile sine(double amp, int j = 1);
  static Profile bump(double amp);  // amp * sin^2(pi y), smooth, vanishes at both ends
  static Profile tabulated(std::vector<double> values);

  static Profile from_name(const std::string& preset, double a = 0.0, double b = 0.0, int j = 1);
  std::string name() const;
};

// The macroscopic initial data: inverse temperature beta(y) in [beta_min, beta_max]
// with beta_min > 0, momentum profile pbar(y), elongation profile rbar(y) with
// rbar(0) = rbar(1) = 0. Quantum runs additionally need integral(pbar) = 0.
struct MacroProfiles {
  Profile beta = Profile::constant(1.0);
  Profile pbar = Profile::zero();
  Profile rbar = Profile::zero();

  double beta_min() const;
  double beta_max() const;
  void validate(bool quantum = false) const;

  static MacroProfiles equilibrium(double beta_value = 1.0);
};

[[noreturn]] void throw_quadrature_failure(double tol);

namespace detail {
extern const double kGl16Nodes[16];
extern const double kGl16Weights[16];
}  // namespace detail

// Integral over [0,1] by composite Gauss-Legendre quadrature, panels doubled
// until successive refinements agree to tol; throws when the cap is reached.
template <class F>
double integrate_fn(const F& f, double tol = 1e-10, int max_panels = 4096) {
  double prev = 0.0;
  bool have_prev = false;
  for (int panels = 1; panels <= max_panels; panels *= 2) {
    double total = 0.0;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * h;
      double sum = 0.0;
      for (int i = 0; i < 16; ++i) {
        const double y = mid + 0.5 * h * detail::kGl16Nodes[i];
        sum += detail::kGl16Weights[i] * f(y);
      }
      total += 0.5 * h * sum;
    }
    if (have_prev && std::abs(total - prev) <= tol * (1.0 + std::abs(total))) return total;
    prev = total;
    have_prev = true;
  }
  throw_quadrature_failure(tol);
}

double integrate(const Profile& f, double tol = 1e-10);

}  // namespace chainlab
