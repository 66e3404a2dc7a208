#include <doctest.h>

#include <cmath>

#include "preavg/weights.hpp"

using namespace preavg;

TEST_SUITE_BEGIN("weights");

TEST_CASE("tent weight evaluations") {
  const weight_function w = make_tent_weight();
  CHECK(w.eval(0.25) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(w.eval(0.0) == 0.0);
  CHECK(w.eval(1.0) == 0.0);
  CHECK(w.eval(0.5) == 0.5);
  CHECK(w.deriv(0.1) == 1.0);
  CHECK(w.deriv(0.9) == -1.0);
}

TEST_CASE("custom weight rejects nonzero endpoints") {
  CHECK_THROWS_AS(make_custom_weight([](double) { return 1.0; },
                                     [](double) { return 0.0; }),
                  error);
}

TEST_CASE("psi_discrete tent examples") {
  const weight_function w = make_tent_weight();
  SUBCASE("k_n = 10") {
    const auto p = psi_discrete(w, 10);
    CHECK(p.psi1n == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.psi2n == doctest::Approx(102.0 / 1200.0).epsilon(1e-14));
    CHECK(p.psi2n == doctest::Approx(0.085).epsilon(1e-14));
  }
  SUBCASE("k_n = 11") {
    const auto p = psi_discrete(w, 11);
    CHECK(p.psi1n == doctest::Approx(10.0 / 11.0).epsilon(1e-14));
  }
  SUBCASE("k_n = 4096 approaches the limit") {
    const auto p = psi_discrete(w, 4096);
    CHECK(std::abs(p.psi2n - 1.0 / 12.0) < 1e-6);
  }
  SUBCASE("k_n < 2 rejected") {
    CHECK_THROWS_AS(psi_discrete(w, 1), invalid_grid_error);
  }
}

TEST_CASE("tent rational arithmetic matches closed forms exactly for k_n 2..64") {
  for (long kn = 2; kn <= 64; ++kn) {
    const auto direct = tent_psi_discrete_exact(kn);
    const auto closed = tent_psi_closed_form(kn);
    CAPTURE(kn);
    CHECK(direct.psi1n == closed.psi1n);
    CHECK(direct.psi2n == closed.psi2n);
    CHECK(direct.psi3n == closed.psi3n);
    CHECK(direct.psi4n == closed.psi4n);
  }
}

TEST_CASE("double-precision psi_discrete agrees with the rational values") {
  const weight_function w = make_tent_weight();
  for (long kn : {2L, 3L, 10L, 11L, 60L, 120L}) {
    const auto p = psi_discrete(w, kn);
    const auto r = tent_psi_discrete_exact(kn);
    CAPTURE(kn);
    CHECK(p.psi1n == doctest::Approx(r.psi1n.value()).epsilon(1e-14));
    CHECK(p.psi2n == doctest::Approx(r.psi2n.value()).epsilon(1e-14));
    CHECK(p.psi3n == doctest::Approx(r.psi3n.value()).epsilon(1e-14));
    CHECK(p.psi4n == doctest::Approx(r.psi4n.value()).epsilon(1e-14));
  }
}

TEST_CASE("tent limit constants") {
  const weight_function w = make_tent_weight();
  const auto closed = psi_limits(w);  // closed forms for the tent
  CHECK(closed.psi1 == 1.0);
  CHECK(closed.psi2 == 1.0 / 12.0);
  CHECK(closed.psi3 == 0.25);
  CHECK(closed.psi4 == 1.0 / 24.0);
  CHECK(closed.psi5 == 1.0 / 96.0);
  CHECK(closed.psi6 == 143.0 / 24192.0);
  CHECK(closed.psi7 == 1.0 / 105.0);

  const auto quad = psi_limits_quadrature(w, 2048);
  CHECK(std::abs(quad.psi1 - closed.psi1) < 1e-9);
  CHECK(std::abs(quad.psi2 - closed.psi2) < 1e-9);
  CHECK(std::abs(quad.psi3 - closed.psi3) < 1e-9);
  CHECK(std::abs(quad.psi4 - closed.psi4) < 1e-9);
  CHECK(std::abs(quad.psi5 - closed.psi5) < 1e-9);
  CHECK(std::abs(quad.psi6 - closed.psi6) < 1e-9);
  CHECK(std::abs(quad.psi7 - closed.psi7) < 1e-9);
}

TEST_CASE("sine weight: psi2 = 1/2 against an independent quadrature oracle") {
  const double pi = 3.14159265358979323846;
  const weight_function w = make_custom_weight(
      [pi](double x) { return std::sin(pi * x); },
      [pi](double x) { return pi * std::cos(pi * x); });
  const auto p = psi_limits(w, 2048);
  CHECK(p.psi2 == doctest::Approx(0.5).epsilon(1e-10));

  // Simpson oracle for int sin(pi x)^2 dx, written from scratch
  const int m = 100000;
  double s = 0.0;
  const double h = 1.0 / m;
  for (int i = 0; i < m; ++i) {
    const double a = i * h, b = (i + 1) * h;
    auto f = [pi](double x) { double v = std::sin(pi * x); return v * v; };
    s += (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * h / 6.0;
  }
  CHECK(p.psi2 == doctest::Approx(s).epsilon(1e-9));
  // psi1 = pi^2/2 analytically
  CHECK(p.psi1 == doctest::Approx(pi * pi / 2.0).epsilon(1e-9));
}

TEST_CASE("discrete constants approach the limits monotonically in trend") {
  const weight_function tent = make_tent_weight();
  const double pi = 3.14159265358979323846;
  const weight_function sine = make_custom_weight(
      [pi](double x) { return std::sin(pi * x); },
      [pi](double x) { return pi * std::cos(pi * x); });
  for (const auto& w : {tent, sine}) {
    const auto lim = psi_limits(w, 2048);
    double prev[4] = {1e99, 1e99, 1e99, 1e99};
    for (long kn : {8L, 32L, 128L}) {
      const auto p = psi_discrete(w, kn);
      const double diff[4] = {std::abs(p.psi1n - lim.psi1), std::abs(p.psi2n - lim.psi2),
                              std::abs(p.psi3n - lim.psi3), std::abs(p.psi4n - lim.psi4)};
      for (int i = 0; i < 4; ++i) {
        CAPTURE(kn);
        CAPTURE(i);
        CHECK(diff[i] <= prev[i] + 1e-12);
        prev[i] = diff[i];
      }
    }
  }
}

TEST_CASE("quadrature self-consistency for a smooth weight") {
  const double pi = 3.14159265358979323846;
  const weight_function w = make_custom_weight(
      [pi](double x) { return std::sin(pi * x); },
      [pi](double x) { return pi * std::cos(pi * x); });
  const auto p1 = psi_limits_quadrature(w, 256);
  const auto p4 = psi_limits_quadrature(w, 1024);
  const double* a = &p1.psi1;
  const double* b = &p4.psi1;
  for (int i = 0; i < 7; ++i) {
    CAPTURE(i);
    CHECK(std::abs(a[i] - b[i]) < 1e-8);
  }
}

TEST_CASE("validate_grid") {
  SUBCASE("desk-scale configs") {
    const auto g = validate_grid(14400, 120, true);
    CHECK(g.d_n == 120);
    CHECK(g.theta == doctest::Approx(1.0).epsilon(1e-15));
    const auto g2 = validate_grid(3600, 60, true);
    CHECK(g2.d_n == 60);
    CHECK(g2.theta == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("strict misalignment") {
    CHECK_THROWS_AS(validate_grid(14400, 119, true), misaligned_grid_error);
    CHECK_NOTHROW(validate_grid(14400, 119, false));
  }
  SUBCASE("invalid windows") {
    CHECK_THROWS_AS(validate_grid(100, 1, true), invalid_grid_error);
    CHECK_THROWS_AS(validate_grid(3, 4, true), invalid_grid_error);
  }
  SUBCASE("relaxed d_n") {
    const auto g = validate_grid(14000, 120, false);
    CHECK(g.d_n == 116);
  }
}

TEST_SUITE_END();
