#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "soblab/quadrature.hpp"

using namespace soblab;
using Catch::Approx;

TEST_CASE("Gauss-Legendre rules integrate polynomials of degree 2n - 1 exactly") {
  for (int order : {2, 5, 16}) {
    const GaussRule rule = make_gauss_legendre(order);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == Approx(2.0).epsilon(1e-14));
    for (int deg = 0; deg <= 2 * order - 1; ++deg) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], deg);
      const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
      CHECK(s == Approx(exact).margin(1e-13));
    }
  }
  CHECK_THROWS_AS(make_gauss_legendre(1), Error);
}

TEST_CASE("one-dimensional integrals") {
  CHECK(integrate_1d({0.0, std::numbers::pi}, [](double x) { return std::sin(x); }) == Approx(2.0).epsilon(1e-12));
  // kink at 0.3 handled by a break
  CHECK(integrate_1d({0.0, 0.3, 1.0}, [](double x) { return std::abs(x - 0.3); }) == Approx(0.045 + 0.245).epsilon(1e-13));
  CHECK(integrate_1d({1.0, 1.0}, [](double) { return 1.0; }) == 0.0);
  CHECK(integrate_1d({1.0, 0.0}, [](double x) { return x; }) == Approx(0.5));
}

TEST_CASE("tensor integrals, vector valued") {
  const std::vector<std::vector<double>> box{{0.0, 1.0}, {0.0, 2.0}};
  const auto r = integrate_box(box, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[1];
    out[1] = std::exp(x[0] + x[1]);
  });
  CHECK(r.values[0] == Approx(1.0).epsilon(1e-13));
  CHECK(r.values[1] == Approx((std::exp(1.0) - 1) * (std::exp(2.0) - 1)).epsilon(1e-12));
}

TEST_CASE("masked cells are skipped") {
  const std::vector<std::vector<double>> box{{0.0, 0.5, 1.0}};
  auto skip_right = [](std::span<const double> lo, std::span<const double>) { return lo[0] >= 0.5; };
  const auto r = integrate_box_masked(box, 1, [](std::span<const double>, std::span<double> out) { out[0] = 1.0; }, skip_right);
  CHECK(r.values[0] == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("non-convergence is reported") {
  QuadratureOptions opts;
  opts.rel_tol = 1e-14;
  opts.max_panels = 2;
  auto rough = [](std::span<const double> x, std::span<double> out) { out[0] = std::sqrt(std::abs(x[0] - 0.123)); };
  const std::vector<std::vector<double>> box{{0.0, 1.0}};
  try {
    (void)integrate_box(box, 1, rough, opts);
    FAIL("expected QuadratureNotConverged");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::QuadratureNotConverged);
  }
  opts.throw_on_failure = false;
  const auto r = integrate_box(box, 1, rough, opts);
  CHECK(r.values[0] > 0.0);
}
