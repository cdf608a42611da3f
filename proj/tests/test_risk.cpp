#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "soblab/geometry.hpp"
#include "soblab/interpolant.hpp"
#include "soblab/risk.hpp"

using namespace soblab;
using Catch::Approx;

namespace {

const SobolevParams kD1 = make_params(1, 1.25, 1);

double brute_f(const BumpInterpolant& f, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.weights[i] * oracle::bump({f.centers[i]}, f.radii[i], {x});
  return s;
}

}  // namespace

TEST_CASE("semi-analytic risk against direct quadrature of f^2") {
  // three separated bumps well inside [-1, 1]
  const Dataset data = make_dataset(1, {-0.5, 0.1, 0.6}, {1.3, -0.8, 2.1});
  const BumpInterpolant f = build(data, nn_radii(data), 0.8, kD1);
  const DistributionSpec spec = pure_noise_spec(1);
  double direct = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double c = f.centers[i];
    const double r = f.radii[i];
    direct += oracle::simpson([&](double x) { return brute_f(f, x) * brute_f(f, x); }, c - r, c - r / 2, 20000) +
              oracle::simpson([&](double x) { return brute_f(f, x) * brute_f(f, x); }, c - r / 2, c + r / 2, 200) +
              oracle::simpson([&](double x) { return brute_f(f, x) * brute_f(f, x); }, c + r / 2, c + r, 20000);
  }
  const RiskEstimate est = excess_risk_semianalytic(f, spec);
  CHECK(est.method == RiskMethod::SemiAnalytic);
  CHECK(est.mean == Approx(direct / 2.0).epsilon(1e-6));
}

TEST_CASE("boundary clipping integrates only the part inside the domain") {
  const Dataset data = make_dataset(1, {-0.95, 0.9}, {1.0, -2.0});
  const BumpInterpolant f = build(data, nn_radii(data), 1.0, kD1);
  const DistributionSpec spec = pure_noise_spec(1);
  CHECK_THROWS_AS(excess_risk_semianalytic(f, spec), Error);
  const double clipped = excess_risk_semianalytic(f, spec, true).mean;
  auto f2 = [&](double x) { return brute_f(f, x) * brute_f(f, x); };
  const double direct = oracle::simpson(f2, -1.0, 0.0, 200000) + oracle::simpson(f2, 0.0, 1.0, 200000);
  CHECK(clipped == Approx(direct / 2.0).epsilon(1e-6));
}

TEST_CASE("Monte Carlo agrees with the semi-analytic oracle") {
  const DistributionSpec spec = pure_noise_spec(1);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset data = sample(spec, 400, seed);
    const BumpInterpolant f = build(data, nn_radii(data), 1.0, kD1);
    const RiskEstimate exact = excess_risk_semianalytic(f, spec, true);
    const RiskEstimate mc = excess_risk_mc([&](std::span<const double> x) { return eval(f, x); }, spec, 200000, seed + 100);
    CHECK(std::abs(mc.mean - exact.mean) <= 3.0 * mc.std_error);
    CHECK(mc.samples == 200000);
  }
}

TEST_CASE("Monte Carlo estimates ignore the thread count") {
  const DistributionSpec spec = pure_noise_spec(2);
  const Dataset data = sample(spec, 300, 4);
  const BumpInterpolant f = build(data, nn_radii(data), 1.0, make_params(1, 2.5, 2));
  auto pred = [&](std::span<const double> x) { return eval(f, x); };
  const RiskEstimate a = excess_risk_mc(pred, spec, 10000, 9, 1);
  const RiskEstimate b = excess_risk_mc(pred, spec, 10000, 9, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK_THROWS_AS(excess_risk_mc(pred, spec, 99, 9), Error);
}

TEST_CASE("Bayes risk of a quadratic noise profile") {
  // sigma^2 = a + b |x|^2, uniform disc: E|x|^2 = 1/2
  DistributionSpec s;
  s.dim = 2;
  s.noise = NoiseKind::Quadratic;
  s.noise_a = 0.3;
  s.noise_b = 0.8;
  s = finalize_spec(s);
  const RiskEstimate b = bayes_risk_mc(s, 200000, 3);
  CHECK(std::abs(b.mean - (0.3 + 0.8 * 0.5)) <= 3.0 * b.std_error);
}

TEST_CASE("joint loss difference estimates the excess risk") {
  DistributionSpec s = pure_noise_spec(1, 0.5);
  s.truth.push_back({{0.0}, 0.6, 1.0});
  s = finalize_spec(s);
  auto pred = [](std::span<const double> x) { return 0.5 * x[0]; };
  const RiskEstimate joint = excess_risk_joint_mc(pred, s, 400000, 5);
  const RiskEstimate plain = excess_risk_mc(pred, s, 400000, 6);
  CHECK(std::abs(joint.mean - plain.mean) <= 3.0 * std::hypot(joint.std_error, plain.std_error));
}

TEST_CASE("semi-analytic risk rejects unsupported models") {
  DistributionSpec s = pure_noise_spec(1);
  s.truth.push_back({{0.0}, 0.5, 1.0});
  s = finalize_spec(s);
  const Dataset data = make_dataset(1, {-0.2, 0.2}, {1.0, 1.0});
  const BumpInterpolant f = build(data, nn_radii(data), 1.0, kD1);
  try {
    (void)excess_risk_semianalytic(f, s);
    FAIL("expected UnsupportedSpec");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedSpec);
  }
}
