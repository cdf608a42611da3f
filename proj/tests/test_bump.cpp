#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "soblab/bump.hpp"
#include "soblab/dual.hpp"

using namespace soblab;
using Catch::Approx;

namespace {

bool has_kind(const Error& e, ErrorKind k) { return e.kind() == k; }

template <class F>
void require_kind(F&& f, ErrorKind k) {
  try {
    f();
    FAIL("expected " << to_string(k));
  } catch (const Error& e) {
    CHECK(has_kind(e, k));
  }
}

// phi^(j)(t) by central differences of the closed-form profile
double profile_fd(double t, int j) {
  std::function<double(const std::vector<double>&)> phi = [](const std::vector<double>& x) {
    return oracle::step((1.0 - x[0]) / 0.75);
  };
  return oracle::partial_fd(phi, {t}, {j}, 1e-3);
}

}  // namespace

TEST_CASE("nested duals differentiate polynomials and exponentials") {
  // f(x) = x^3 exp(x): derivatives checked against the product rule by hand
  const double x = 0.3;
  const auto v = seeded_variable<3>(x, 0b111U);
  const auto f = v * v * v * exp(v);
  const double e = std::exp(x);
  CHECK(primal(f) == Approx(x * x * x * e));
  CHECK(top_coefficient(f) == Approx((6 + 18 * x + 9 * x * x + x * x * x) * e).epsilon(1e-13));
  const auto g = seeded_variable<2>(x, 0b01U);
  CHECK(top_coefficient(g * g) == 0.0);  // only one level seeded
}

TEST_CASE("profile values") {
  CHECK(profile_eval(0.0, 0) == 1.0);
  CHECK(profile_eval(0.25, 0) == 1.0);
  CHECK(profile_eval(2.0, 0) == 0.0);
  CHECK(profile_eval(1.0, 0) == 0.0);
  const double mid = profile_eval(0.5, 0);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  CHECK(mid == Approx(oracle::step(0.5 / 0.75)).epsilon(1e-14));
  require_kind([] { (void)profile_eval(0.5, 4); }, ErrorKind::UnsupportedOrder);
}

TEST_CASE("profile derivatives match finite differences") {
  for (double t : {0.3, 0.45, 0.6, 0.75, 0.9}) {
    const auto jet = profile_jet(t);
    for (int j = 1; j <= 3; ++j) {
      const double fd = profile_fd(t, j);
      CHECK(jet[static_cast<std::size_t>(j)] == Approx(fd).epsilon(1e-6).margin(1e-6));
    }
  }
}

TEST_CASE("bump values at center, edge and inside") {
  const std::vector<double> c{0.2, -0.1};
  const double delta = 0.8;
  CHECK(bump_eval(c, delta, c) == 1.0);
  const std::vector<double> edge{0.2 + delta, -0.1};
  CHECK(bump_eval(c, delta, edge) == 0.0);
  const std::vector<double> inner{0.2 + 0.6 * delta, -0.1};
  const double v = bump_eval(c, delta, inner);
  CHECK(v > 0.0);
  CHECK(v < 1.0);
  CHECK(v == Approx(oracle::bump(c, delta, inner)).epsilon(1e-14));
  require_kind([&] { (void)bump_eval(c, 0.0, inner); }, ErrorKind::NonpositiveRadius);
}

TEST_CASE("bump partials match finite differences at random probes") {
  Rng rng(2024);
  for (int d = 1; d <= 3; ++d) {
    const auto alphas = multi_indices(d, 3);
    std::vector<double> c(static_cast<std::size_t>(d));
    for (auto& v : c) v = rng.uniform(-0.5, 0.5);
    const double delta = 0.9;
    std::function<double(const std::vector<double>&)> psi = [&](const std::vector<double>& x) { return oracle::bump(c, delta, x); };
    for (int probe = 0; probe < 20; ++probe) {
      std::vector<double> x(c);
      // radial position inside the transition band so no derivative is trivially zero
      std::vector<double> dir(static_cast<std::size_t>(d));
      double norm = 0.0;
      for (auto& v : dir) {
        v = rng.normal();
        norm += v * v;
      }
      const double r = delta * rng.uniform(0.55, 0.95);
      for (std::size_t j = 0; j < x.size(); ++j) x[j] += r * dir[j] / std::sqrt(norm);
      for (const auto& a : alphas) {
        if (order(a) == 0) continue;
        const std::vector<int> av(a.begin(), a.begin() + d);
        const double fd = oracle::partial_fd_extrapolated(psi, x, av, 4e-3);
        const double ad = bump_partial(a, c, delta, x);
        const double jet = bump_partial_jet(a, c, delta, x);
        REQUIRE(ad == Approx(fd).epsilon(1e-6).margin(1e-6));
        REQUIRE(jet == Approx(ad).epsilon(1e-12).margin(1e-12));
      }
    }
  }
}

TEST_CASE("known second and third derivatives") {
  const std::vector<double> c1{0.0};
  const std::vector<double> x1{0.7};
  CHECK(bump_partial({2, 0, 0}, c1, 1.0, x1) == Approx(-23.9743).epsilon(1e-5));
  const std::vector<double> c3{0.0, 0.0, 0.0};
  const std::vector<double> x3{0.4, 0.35, 0.3};
  const double ad = bump_partial({1, 1, 1}, c3, 1.0, x3);
  std::function<double(const std::vector<double>&)> psi = [&](const std::vector<double>& x) { return oracle::bump(c3, 1.0, x); };
  CHECK(ad == Approx(oracle::partial_fd(psi, {0.4, 0.35, 0.3}, {1, 1, 1}, 2e-3)).epsilon(1e-6));
  require_kind([&] { (void)bump_partial({2, 2, 0}, c3, 1.0, x3); }, ErrorKind::UnsupportedOrder);
  require_kind([&] { (void)bump_partial({0, 1, 0}, c1, 1.0, x1); }, ErrorKind::UnknownMultiIndex);
}

TEST_CASE("parameter validation and multi-indices") {
  CHECK(make_params(1, 1.25, 1).strict_range());
  CHECK(make_params(2, 2.0, 3).strict_range());
  require_kind([] { (void)make_params(1, 1.0, 1); }, ErrorKind::InvalidParams);
  require_kind([] { (void)make_params(1, 2.0, 4); }, ErrorKind::InvalidParams);
  require_kind([] { (void)make_params(1, 0.5, 1); }, ErrorKind::InvalidParams);
  CHECK(multi_indices(1, 1).size() == 2);
  CHECK(multi_indices(2, 1).size() == 3);
  CHECK(multi_indices(3, 2).size() == 10);
  CHECK(multi_indices(3, 3).size() == 20);
  const auto idx = multi_indices(3, 2);
  for (std::size_t i = 1; i < idx.size(); ++i) CHECK(order(idx[i - 1]) <= order(idx[i]));
}

TEST_CASE("one-dimensional moduli against Simpson") {
  const auto m = compute_moduli(1, 1, 1.25);
  // psi_1 is even, so integrate over [0, 1] and double
  const double m0 = 2.0 * (oracle::simpson([](double x) { return oracle::bump({0.0}, 1.0, {x}); }, 0.0, 0.5, 2000) +
                           oracle::simpson([](double x) { return std::pow(oracle::bump({0.0}, 1.0, {x}), 1.25); }, 0.5, 1.0, 20000));
  auto dpsi = [](double x) {
    std::function<double(const std::vector<double>&)> psi = [](const std::vector<double>& y) { return oracle::bump({0.0}, 1.0, y); };
    return std::pow(std::abs(oracle::central_diff(psi, {x}, 0, 1e-4)), 1.25);
  };
  const double m1 = 2.0 * oracle::simpson(dpsi, 0.5, 1.0, 20000);
  CHECK(m.values[0] == Approx(m0).epsilon(1e-8));
  CHECK(m.values[1] == Approx(m1).epsilon(1e-7));
  CHECK(m.values[0] == Approx(1.54316).epsilon(1e-5));
  CHECK(m.values[1] == Approx(2.69004).epsilon(1e-5));
}

TEST_CASE("two-dimensional moduli in polar form") {
  const double p = 2.5;
  const auto m = compute_moduli(2, 1, p);
  auto phi = [](double t) { return oracle::step((1.0 - t) / 0.75); };
  auto dphi = [&](double t) {
    std::function<double(const std::vector<double>&)> f = [&](const std::vector<double>& y) { return phi(y[0]); };
    return oracle::central_diff(f, {t}, 0, 1e-4);
  };
  const double m0 = 2.0 * std::numbers::pi *
                    (oracle::simpson([&](double r) { return r * phi(r * r); }, 0.0, 0.5, 2000) +
                     oracle::simpson([&](double r) { return r * std::pow(phi(r * r), p); }, 0.5, 1.0, 20000));
  // |d/dx1 psi| = |phi'(r^2)| 2 r |cos theta|
  const double angular = oracle::simpson([&](double th) { return std::pow(std::abs(std::cos(th)), p); }, 0.0, std::numbers::pi / 2, 20000) * 4.0;
  const double radial = oracle::simpson([&](double r) { return std::pow(std::abs(dphi(r * r)) * 2.0 * r, p) * r; }, 0.5, 1.0, 20000);
  CHECK(m.at({0, 0, 0}) == Approx(m0).epsilon(1e-8));
  CHECK(m.at({1, 0, 0}) == Approx(angular * radial).epsilon(1e-6));
  CHECK(m.at({0, 1, 0}) == Approx(m.at({1, 0, 0})).epsilon(1e-10));
}

TEST_CASE("moduli are stable under a tighter tolerance") {
  QuadratureOptions tight;
  tight.rel_tol = 1e-11;
  tight.max_panels = 1024;
  const auto a = compute_moduli(1, 2, 2.0);
  const auto b = compute_moduli(1, 2, 2.0, tight);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == Approx(b.values[i]).epsilon(1e-8));
}

TEST_CASE("scaled seminorm equals direct quadrature at delta = 0.5") {
  const auto m = compute_moduli(1, 1, 1.25);
  const double delta = 0.5;
  std::function<double(const std::vector<double>&)> psi = [&](const std::vector<double>& y) { return oracle::bump({0.0}, delta, y); };
  const double direct = 2.0 * oracle::simpson([&](double x) { return std::pow(std::abs(oracle::central_diff(psi, {x}, 0, 1e-5)), 1.25); },
                                              delta / 2, delta, 20000);
  CHECK(scaled_seminorm({1, 0, 0}, delta, m) == Approx(direct).epsilon(1e-6));
  const double direct0 = 2.0 * (oracle::simpson([&](double x) { return psi({x}); }, 0.0, delta / 2, 200) +
                                oracle::simpson([&](double x) { return std::pow(psi({x}), 1.25); }, delta / 2, delta, 20000));
  CHECK(scaled_seminorm({0, 0, 0}, delta, m) == Approx(direct0).epsilon(1e-8));
}

TEST_CASE("bump norm at delta = 0.7 against quadrature of each seminorm") {
  const auto m = compute_moduli(1, 1, 1.25);
  const double delta = 0.7;
  std::function<double(const std::vector<double>&)> psi = [&](const std::vector<double>& y) { return oracle::bump({0.0}, delta, y); };
  const double s0 = 2.0 * (oracle::simpson([&](double x) { return psi({x}); }, 0.0, delta / 2, 200) +
                           oracle::simpson([&](double x) { return std::pow(psi({x}), 1.25); }, delta / 2, delta, 20000));
  const double s1 = 2.0 * oracle::simpson([&](double x) { return std::pow(std::abs(oracle::central_diff(psi, {x}, 0, 1e-5)), 1.25); },
                                          delta / 2, delta, 20000);
  const double direct = std::pow(s0, 0.8) + std::pow(s1, 0.8);
  CHECK(bump_norm(delta, m) == Approx(direct).epsilon(1e-6));
}

TEST_CASE("bump norm scales like delta^{(d - kp)/p} for small delta") {
  const auto m = compute_moduli(1, 1, 1.25);
  double lo = 1e300;
  double hi = 0.0;
  for (int j = 1; j <= 8; ++j) {
    const double delta = std::ldexp(1.0, -j);
    const double scaled = bump_norm(delta, m) * std::pow(delta, (1.25 - 1.0) / 1.25);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
    CHECK(bump_norm(delta, m) <= bump_norm_upper_bound(delta, m));
  }
  CHECK(lo > 0.5);
  CHECK(hi < 3.0);
  for (double delta : {1.0, 2.0, 8.0, 100.0}) CHECK(bump_norm(delta, m) <= bump_norm_upper_bound(delta, m));
}

TEST_CASE("moduli cache file round trip") {
  const auto m = compute_moduli(2, 1, 2.5);
  std::stringstream s;
  save_moduli(m, s);
  const auto back = load_moduli(s);
  CHECK(back.params == m.params);
  CHECK(back.values == m.values);
  CHECK(back.indices == m.indices);
  std::stringstream bad("k 1\np 0x1p+1\nd 1\nM 1 0x1p+0\nM 0 0x1p+0\n");
  require_kind([&] { (void)load_moduli(bad); }, ErrorKind::ParseError);
  std::stringstream junk("k 1\nwhat is this\n");
  require_kind([&] { (void)load_moduli(junk); }, ErrorKind::ParseError);
  require_kind([&] { (void)m.at({2, 0, 0}); }, ErrorKind::UnknownMultiIndex);
}
