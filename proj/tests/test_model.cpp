#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "soblab/geometry.hpp"
#include "soblab/model.hpp"

using namespace soblab;
using Catch::Approx;

namespace {

DistributionSpec bumpy_spec() {
  DistributionSpec s;
  s.dim = 2;
  s.density = DensityKind::RadialQuadratic;
  s.density_a = 1.5;
  s.noise = NoiseKind::Quadratic;
  s.noise_a = 0.25;
  s.noise_b = 0.5;
  s.truth.push_back({{0.2, 0.1}, 0.5, 1.2});
  s.truth.push_back({{-0.4, 0.0}, 0.3, -0.7});
  return finalize_spec(s);
}

}  // namespace

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == 2.0);
  CHECK(unit_ball_volume(2) == Approx(std::numbers::pi));
  CHECK(unit_ball_volume(3) == Approx(4.0 * std::numbers::pi / 3.0));
}

TEST_CASE("conditional loss and regret closed forms") {
  const DistributionSpec pure = pure_noise_spec(1);
  const double x = 0.3;
  const std::span<const double> xs(&x, 1);
  CHECK(conditional_loss(pure, 0.0, xs) == 1.0);
  CHECK(conditional_loss(pure, 2.0, xs) == 5.0);
  DistributionSpec one = pure_noise_spec(1, 0.7);
  one.truth.push_back({{0.3}, 0.5, 1.0});
  one = finalize_spec(one);
  CHECK(truth_at(one, xs) == 1.0);
  CHECK(regret(one, 3.0, xs) == 4.0);
  CHECK(conditional_loss(one, truth_at(one, xs), xs) == Approx(0.49));
  const double outside = 1.5;
  CHECK_THROWS_AS(regret(one, 0.0, std::span<const double>(&outside, 1)), Error);
}

TEST_CASE("Monte Carlo conditional loss agrees with the closed form") {
  const DistributionSpec s = bumpy_spec();
  Rng rng(31);
  for (int probe = 0; probe < 10; ++probe) {
    std::vector<double> x(2);
    sample_input(s, rng, x);
    const double yhat = rng.uniform(-2.0, 2.0);
    const double g = truth_at(s, x);
    const double sig = sigma_at(s, x);
    double sum = 0.0;
    double sum2 = 0.0;
    const int m = 100000;
    for (int i = 0; i < m; ++i) {
      const double y = g + sig * rng.normal();
      const double l = (yhat - y) * (yhat - y);
      sum += l;
      sum2 += l * l;
    }
    const double mean = sum / m;
    const double se = std::sqrt((sum2 / m - mean * mean) / m);
    CHECK(std::abs(mean - conditional_loss(s, yhat, x)) <= 3.0 * se);
  }
}

TEST_CASE("sampling is deterministic and stays in the domain") {
  const DistributionSpec s = bumpy_spec();
  const Dataset a = sample(s, 500, 9);
  const Dataset b = sample(s, 500, 9);
  CHECK(a.coords == b.coords);
  CHECK(a.labels == b.labels);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(in_domain(s, a.point(i)));
  CHECK(sample(s, 500, 10).coords != a.coords);
}

TEST_CASE("radial density matches its second moment") {
  // p(x) proportional to 1 + a |x|^2 on the unit disc: E|x|^2 = (1/2 + a/3) / (1 + a/2)
  const DistributionSpec s = bumpy_spec();
  const Dataset data = sample(s, 200000, 4);
  double m2 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) m2 += squared_norm(data.point(i));
  m2 /= static_cast<double>(data.size());
  const double a = 1.5;
  CHECK(m2 == Approx((0.5 + a / 3.0) / (1.0 + a / 2.0)).epsilon(0.01));
  CHECK(s.c_D > 0.0);
  CHECK(s.C_D >= s.c_D);
}

TEST_CASE("noise constants") {
  const DistributionSpec s = bumpy_spec();
  const NoiseConstants nc = noise_constants(s);
  CHECK(nc.rho == Approx(0.31731).epsilon(1e-4));
  CHECK(nc.rho_floor <= nc.rho);
  CHECK(nc.sigma_floor == Approx(0.25));
  const NoiseCheck check = check_noise_constants(s, 10, 100000, 12);
  CHECK(check.all_ok());
  // constant noise: the margin event has probability exactly rho
  const NoiseCheck flat = check_noise_constants(pure_noise_spec(1), 5, 100000, 13);
  for (const auto& p : flat.probes) CHECK(std::abs(p.margin_freq - nc.rho) <= 3.0 * p.margin_stderr);
}

TEST_CASE("invalid specs are rejected") {
  DistributionSpec s;
  s.dim = 2;
  s.domain_radius = -1.0;
  CHECK_THROWS_AS(finalize_spec(s), Error);
  DistributionSpec t;
  t.dim = 1;
  t.truth.push_back({{0.0, 0.0}, 0.5, 1.0});
  CHECK_THROWS_AS(finalize_spec(t), Error);
  DistributionSpec u;
  u.noise = NoiseKind::Quadratic;
  u.noise_a = 0.0;
  u.noise_b = 0.0;
  CHECK_THROWS_AS(finalize_spec(u), Error);
}

TEST_CASE("noisy separated subset on a hand-built dataset") {
  // wide spacing everywhere, one label far beyond sigma_min, two labels inside it
  const DistributionSpec s = pure_noise_spec(1);
  const Dataset data = make_dataset(1, {-0.9, 0.0, 0.9}, {0.1, 1.8, -0.2});
  const SubsetSelection sel = noisy_separated_subset(data, nn_radii(data), s);
  CHECK(sel.indices == std::vector<std::size_t>{1});
  CHECK(sel.radius_threshold == Approx(std::pow(2.0 * (0.5 * 2.0) * 3.0, -1.0)));
  CHECK(sel.label_cap == Approx(std::sqrt(2.0) * std::sqrt(std::log(4.0 / std::erfc(1 / std::sqrt(2.0))))));
}

TEST_CASE("subset members satisfy each property and the subset is large") {
  const DistributionSpec s = pure_noise_spec(2);
  const NoiseConstants nc = noise_constants(s);
  int large = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset data = sample(s, 4096, seed);
    const NnRadii r = nn_radii(data);
    const SubsetSelection sel = noisy_separated_subset(data, r, s);
    for (std::size_t i : sel.indices) {
      REQUIRE(r.radii[i] >= sel.radius_threshold);
      REQUIRE(std::abs(data.labels[i]) <= sel.label_cap);
      REQUIRE(data.labels[i] * data.labels[i] >= nc.sigma_floor);
    }
    large += static_cast<double>(sel.indices.size()) >= nc.rho * 4096 / 8 ? 1 : 0;
  }
  CHECK(large == 20);
}

TEST_CASE("domain ball fraction") {
  for (int d = 1; d <= 3; ++d) {
    const DistributionSpec s = pure_noise_spec(d);
    std::vector<double> x0(static_cast<std::size_t>(d), 0.0);
    x0[0] = 1.0;
    const FractionEstimate f = domain_ball_fraction(s, x0, 2.0, 200000, 5);
    CHECK(std::abs(f.estimate - std::ldexp(1.0, -d)) <= 4.0 * f.std_error);
    const std::vector<double> center(static_cast<std::size_t>(d), 0.0);
    CHECK(domain_ball_fraction(s, center, 0.5, 1000, 1).estimate == 1.0);
  }
}
