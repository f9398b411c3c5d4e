#include "doctest.h"

#include <cmath>
#include <vector>

#include "chainlab/profiles.hpp"

using namespace chainlab;

constexpr double kPi = 3.14159265358979323846;

TEST_CASE("preset profiles evaluate their formulas") {
  Profile c = Profile::cosine(0.3, 2);
  CHECK(c(0.25) == doctest::Approx(0.3 * std::cos(2 * kPi * 0.25)).epsilon(1e-15));
  Profile s = Profile::sine(1.5, 3);
  CHECK(s(0.1) == doctest::Approx(1.5 * std::sin(3 * kPi * 0.1)).epsilon(1e-15));
  Profile lin = Profile::linear(0.9, 1.1);
  CHECK(lin(0.0) == doctest::Approx(0.9));
  CHECK(lin(1.0) == doctest::Approx(1.1));
  CHECK(lin(0.5) == doctest::Approx(1.0));
  Profile b = Profile::bump(2.0);
  CHECK(b(0.0) == doctest::Approx(0.0));
  CHECK(b(0.5) == doctest::Approx(2.0));
  CHECK(b(1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("quadrature reproduces closed-form integrals to 1e-12") {
  CHECK(integrate(Profile::constant(2.5)) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(integrate(Profile::linear(1.0, 3.0)) == doctest::Approx(2.0).epsilon(1e-14));
  // int_0^1 cos(j pi y) dy = 0 for even j, 0 for j=2; sin(pi y) integrates to 2/pi
  CHECK(std::abs(integrate(Profile::cosine(1.0, 2))) < 1e-12);
  CHECK(integrate(Profile::sine(1.0, 1)) == doctest::Approx(2.0 / kPi).epsilon(1e-12));
  // bump a*sin^2(pi y) integrates to a/2
  CHECK(integrate(Profile::bump(3.0)) == doctest::Approx(1.5).epsilon(1e-12));

  double val = integrate_fn([](double y) { return std::exp(y); });
  CHECK(val == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  double osc = integrate_fn([](double y) { return std::sin(40.0 * kPi * y) * std::sin(40.0 * kPi * y); });
  CHECK(osc == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("tabulated profile interpolates linearly") {
  std::vector<double> table(257);
  for (size_t i = 0; i < table.size(); ++i) {
    double y = double(i) / double(table.size() - 1);
    table[i] = 1.0 + 0.5 * y;
  }
  Profile t = Profile::tabulated(table);
  CHECK(t(0.0) == doctest::Approx(1.0));
  CHECK(t(1.0) == doctest::Approx(1.5));
  CHECK(t(0.3121) == doctest::Approx(1.0 + 0.5 * 0.3121).epsilon(1e-12));
  CHECK_THROWS(Profile::tabulated(std::vector<double>(16, 1.0)));
}

TEST_CASE("grid extrema bracket the true range") {
  Profile c = Profile::cosine(0.4, 1);
  CHECK(c.max_on_grid() == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(c.min_on_grid() == doctest::Approx(-0.4).epsilon(1e-6));
  Profile lin = Profile::linear(0.9, 1.1);
  CHECK(lin.min_on_grid() == doctest::Approx(0.9));
  CHECK(lin.max_on_grid() == doctest::Approx(1.1));
}

TEST_CASE("macro profile validation enforces admissibility") {
  MacroProfiles good = MacroProfiles::equilibrium(2.0);
  CHECK_NOTHROW(good.validate());
  CHECK(good.beta_min() == doctest::Approx(2.0));
  CHECK(good.beta_max() == doctest::Approx(2.0));

  MacroProfiles hydro;
  hydro.beta = Profile::linear(0.9, 1.1);
  hydro.pbar = Profile::cosine(0.3, 1);
  hydro.rbar = Profile::sine(0.2, 1);
  CHECK_NOTHROW(hydro.validate());
  CHECK_NOTHROW(hydro.validate(true));  // cos(pi y) has zero mean

  MacroProfiles bad_beta;
  bad_beta.beta = Profile::linear(-1.0, 1.0);
  CHECK_THROWS(bad_beta.validate());

  MacroProfiles bad_rbar;
  bad_rbar.rbar = Profile::cosine(0.2, 1);  // nonzero at the endpoints
  CHECK_THROWS(bad_rbar.validate());

  MacroProfiles drift;
  drift.pbar = Profile::constant(0.4);  // nonzero mean momentum
  CHECK_NOTHROW(drift.validate(false));
  CHECK_THROWS(drift.validate(true));
}
