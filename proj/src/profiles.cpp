#include "chainlab/profiles.hpp"

#include <algorithm>
#include <stdexcept>

namespace chainlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double Profile::operator()(double y) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return a;
    case Kind::Linear:
      return a + (b - a) * y;
    case Kind::Cosine:
      return a * std::cos(j * kPi * y);
    case Kind::Sine:
      return a * std::sin(j * kPi * y);
    case Kind::Bump: {
      const double s = std::sin(kPi * y);
      return a * s * s;
    }
    case Kind::Tabulated: {
      const int m = static_cast<int>(table.size());
      if (m == 0) return 0.0;
      if (m == 1) return table[0];
      double u = std::clamp(y, 0.0, 1.0) * (m - 1);
      int i = std::min(static_cast<int>(u), m - 2);
      const double w = u - i;
      return (1.0 - w) * table[i] + w * table[i + 1];
    }
  }
  return 0.0;
}

double Profile::min_on_grid(int pts) const {
  double m = (*this)(0.0);
  for (int i = 1; i < pts; ++i) m = std::min(m, (*this)(static_cast<double>(i) / (pts - 1)));
  return m;
}

double Profile::max_on_grid(int pts) const {
  double m = (*this)(0.0);
  for (int i = 1; i < pts; ++i) m = std::max(m, (*this)(static_cast<double>(i) / (pts - 1)));
  return m;
}

Profile Profile::zero() { return {}; }

Profile Profile::constant(double c) {
  Profile p;
  p.kind = Kind::Constant;
  p.a = c;
  return p;
}

Profile Profile::linear(double at0, double at1) {
  Profile p;
  p.kind = Kind::Linear;
  p.a = at0;
  p.b = at1;
  return p;
}

Profile Profile::cosine(double amp, int j) {
  Profile p;
  p.kind = Kind::Cosine;
  p.a = amp;
  p.j = j;
  return p;
}

Profile Profile::sine(double amp, int j) {
  Profile p;
  p.kind = Kind::Sine;
  p.a = amp;
  p.j = j;
  return p;
}

Profile Profile::bump(double amp) {
  Profile p;
  p.kind = Kind::Bump;
  p.a = amp;
  return p;
}

Profile Profile::tabulated(std::vector<double> values) {
  if (values.size() < 128)
    throw std::invalid_argument("tabulated profile needs at least 128 grid points");
  Profile p;
  p.kind = Kind::Tabulated;
  p.table = std::move(values);
  return p;
}

Profile Profile::from_name(const std::string& preset, double a, double b, int j) {
  if (preset == "zero") return zero();
  if (preset == "constant") return constant(a);
  if (preset == "linear") return linear(a, b);
  if (preset == "cosine") return cosine(a, j);
  if (preset == "sine") return sine(a, j);
  if (preset == "bump") return bump(a);
  throw std::invalid_argument("unknown profile preset: " + preset);
}

std::string Profile::name() const {
  switch (kind) {
    case Kind::Zero:
      return "zero";
    case Kind::Constant:
      return "constant";
    case Kind::Linear:
      return "linear";
    case Kind::Cosine:
      return "cosine";
    case Kind::Sine:
      return "sine";
    case Kind::Bump:
      return "bump";
    case Kind::Tabulated:
      return "tabulated";
  }
  return "zero";
}

double MacroProfiles::beta_min() const { return beta.min_on_grid(); }
double MacroProfiles::beta_max() const { return beta.max_on_grid(); }

void MacroProfiles::validate(bool quantum) const {
  if (beta_min() <= 0.0) throw std::invalid_argument("beta profile must be strictly positive");
  const double r0 = rbar(0.0), r1 = rbar(1.0);
  if (std::abs(r0) > 1e-12 || std::abs(r1) > 1e-12)
    throw std::invalid_argument("rbar must vanish at y=0 and y=1");
  if (quantum) {
    const double total_p = integrate_fn([&](double y) { return pbar(y); });
    if (std::abs(total_p) > 1e-10)
      throw std::invalid_argument("quantum profiles need integral(pbar) = 0");
  }
}

MacroProfiles MacroProfiles::equilibrium(double beta_value) {
  MacroProfiles mp;
  mp.beta = Profile::constant(beta_value);
  return mp;
}

void throw_quadrature_failure(double tol) {
  throw std::runtime_error("quadrature did not converge to tolerance " + std::to_string(tol));
}

double integrate(const Profile& f, double tol) {
  return integrate_fn([&](double y) { return f(y); }, tol);
}

namespace detail {

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
const double kGl16Nodes[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};

const double kGl16Weights[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

}  // namespace detail

}  // namespace chainlab
