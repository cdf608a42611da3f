#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "soblab/bump.hpp"
#include "soblab/dataset.hpp"
#include "soblab/error.hpp"
#include "soblab/geometry.hpp"
#include "soblab/quadrature.hpp"
#include "soblab/random.hpp"

namespace soblab {

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  if (d == 1) return 2.0;
  if (d == 2) return std::numbers::pi;
  if (d == 3) return 4.0 * std::numbers::pi / 3.0;
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

enum class DensityKind { Uniform, RadialQuadratic };
enum class NoiseKind { Constant, Quadratic };

struct TruthBump {
  std::vector<double> center;
  double radius = 1.0;
  double weight = 0.0;
};

/// Gaussian heteroskedastic model on the ball B(0, R):
/// x ~ p_x, y = g(x) + sigma(x) eps, eps ~ N(0, 1).
struct DistributionSpec {
  int dim = 1;
  double domain_radius = 1.0;

  DensityKind density = DensityKind::Uniform;
  double density_a = 0.0;  // p_x proportional to 1 + a |x|^2 / R^2

  NoiseKind noise = NoiseKind::Constant;
  double sigma = 1.0;      // constant noise level
  double noise_a = 1.0;    // quadratic: sigma(x)^2 = a + b |x|^2
  double noise_b = 0.0;

  std::vector<TruthBump> truth;

  // derived at construction
  double normalizer = 1.0;
  double c_D = 0.0;
  double C_D = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;

  [[nodiscard]] bool pure_noise() const noexcept {
    return std::all_of(truth.begin(), truth.end(), [](const TruthBump& b) { return b.weight == 0.0; });
  }
  [[nodiscard]] double domain_volume() const { return unit_ball_volume(dim) * std::pow(domain_radius, dim); }
};

inline bool in_domain(const DistributionSpec& spec, std::span<const double> x) {
  return x.size() == static_cast<std::size_t>(spec.dim) && squared_norm(x) <= spec.domain_radius * spec.domain_radius;
}

inline double density_at(const DistributionSpec& spec, std::span<const double> x) {
  if (!in_domain(spec, x)) return 0.0;
  if (spec.density == DensityKind::Uniform) return 1.0 / spec.normalizer;
  const double R = spec.domain_radius;
  return (1.0 + spec.density_a * squared_norm(x) / (R * R)) / spec.normalizer;
}

inline double sigma_at(const DistributionSpec& spec, std::span<const double> x) {
  if (spec.noise == NoiseKind::Constant) return spec.sigma;
  return std::sqrt(spec.noise_a + spec.noise_b * squared_norm(x));
}

inline double truth_at(const DistributionSpec& spec, std::span<const double> x) {
  double g = 0.0;
  for (const auto& b : spec.truth) {
    if (b.weight != 0.0) g += b.weight * bump_eval(b.center, b.radius, x);
  }
  return g;
}

/// sup |g|: the largest weight when bump supports are disjoint, else the sum of weights.
inline double truth_sup(const DistributionSpec& spec) {
  bool disjoint = true;
  for (std::size_t i = 0; i < spec.truth.size() && disjoint; ++i) {
    for (std::size_t j = i + 1; j < spec.truth.size(); ++j) {
      const double dist = std::sqrt(squared_distance(spec.truth[i].center, spec.truth[j].center));
      if (dist < spec.truth[i].radius + spec.truth[j].radius) {
        disjoint = false;
        break;
      }
    }
  }
  double best = 0.0;
  double sum = 0.0;
  for (const auto& b : spec.truth) {
    best = std::max(best, std::abs(b.weight));
    sum += std::abs(b.weight);
  }
  return disjoint ? best : sum;
}

/// Validates the raw fields and fills in the derived constants. The density is checked
/// to integrate to one by radial quadrature.
inline DistributionSpec finalize_spec(DistributionSpec spec) {
  const int d = spec.dim;
  const double R = spec.domain_radius;
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidParams, "dimension must be 1, 2 or 3");
  if (!(R > 0.0)) throw Error(ErrorKind::InvalidParams, "domain radius must be positive");
  const double vol = unit_ball_volume(d) * std::pow(R, d);
  if (spec.density == DensityKind::Uniform) {
    spec.normalizer = vol;
    spec.c_D = spec.C_D = 1.0 / vol;
  } else {
    if (!(spec.density_a > -1.0)) throw Error(ErrorKind::InvalidParams, "density coefficient a must exceed -1");
    spec.normalizer = vol * (1.0 + spec.density_a * d / (d + 2.0));
    spec.c_D = std::min(1.0, 1.0 + spec.density_a) / spec.normalizer;
    spec.C_D = std::max(1.0, 1.0 + spec.density_a) / spec.normalizer;
  }
  if (spec.noise == NoiseKind::Constant) {
    if (!(spec.sigma > 0.0)) throw Error(ErrorKind::InvalidParams, "noise sigma must be positive");
    spec.sigma_min = spec.sigma_max = spec.sigma;
  } else {
    const double at_edge = spec.noise_a + spec.noise_b * R * R;
    if (!(spec.noise_a > 0.0) || !(at_edge > 0.0)) {
      throw Error(ErrorKind::InvalidParams, "quadratic noise variance must stay positive on the domain");
    }
    spec.sigma_min = std::sqrt(std::min(spec.noise_a, at_edge));
    spec.sigma_max = std::sqrt(std::max(spec.noise_a, at_edge));
  }
  for (std::size_t i = 0; i < spec.truth.size(); ++i) {
    const auto& b = spec.truth[i];
    if (b.center.size() != static_cast<std::size_t>(d)) throw Error(ErrorKind::MismatchedLengths, "truth bump " + std::to_string(i) + " has wrong dimension");
    if (!(b.radius > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "truth bump " + std::to_string(i) + " radius");
    if (std::sqrt(squared_norm(b.center)) + b.radius > R * (1.0 + 1e-12)) {
      throw Error(ErrorKind::InvalidParams, "truth bump " + std::to_string(i) + " leaves the domain");
    }
  }

  // radial check: int_0^R p(r) |S^{d-1}| r^{d-1} dr = 1
  const double sphere = d * unit_ball_volume(d);
  const double mass = integrate_1d({0.0, R}, [&](double r) {
    const double pr = spec.density == DensityKind::Uniform ? 1.0 : 1.0 + spec.density_a * r * r / (R * R);
    return pr / spec.normalizer * sphere * std::pow(r, d - 1);
  });
  if (std::abs(mass - 1.0) > 1e-6) throw Error(ErrorKind::InvalidParams, "density integrates to " + format_double(mass));
  return spec;
}

/// Uniform density, g = 0, constant sigma.
inline DistributionSpec pure_noise_spec(int d, double sigma = 1.0, double radius = 1.0) {
  DistributionSpec spec;
  spec.dim = d;
  spec.domain_radius = radius;
  spec.sigma = sigma;
  return finalize_spec(spec);
}

inline constexpr std::size_t kRejectionBudget = 100000;

namespace detail {

inline void draw_in_ball(Rng& rng, int d, double R, std::span<double> x) {
  for (std::size_t attempt = 0; attempt < kRejectionBudget; ++attempt) {
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = rng.uniform(-R, R);
    if (squared_norm(x) <= R * R) return;
  }
  throw Error(ErrorKind::RejectionBudgetExceeded, "ball rejection sampler exhausted its budget");
}

}  // namespace detail

/// One input point from p_x: uniform ball proposals thinned by p_x / C_D.
inline void sample_input(const DistributionSpec& spec, Rng& rng, std::span<double> x) {
  for (std::size_t attempt = 0; attempt < kRejectionBudget; ++attempt) {
    detail::draw_in_ball(rng, spec.dim, spec.domain_radius, x);
    if (spec.density == DensityKind::Uniform) return;
    if (rng.uniform() * spec.C_D < density_at(spec, x)) return;
  }
  throw Error(ErrorKind::RejectionBudgetExceeded, "density rejection sampler exhausted its budget (C_D misdeclared?)");
}

inline Dataset sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::TooFewPoints, "need at least 2 samples, got " + std::to_string(n));
  Rng rng(seed);
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  std::vector<double> coords(n * d);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> x(coords.data() + i * d, d);
    sample_input(spec, rng, x);
    labels[i] = truth_at(spec, x) + sigma_at(spec, x) * rng.normal();
  }
  return make_dataset(spec.dim, std::move(coords), std::move(labels));
}

namespace detail {

inline void require_in_domain(const DistributionSpec& spec, std::span<const double> x) {
  if (!in_domain(spec, x)) throw Error(ErrorKind::OutOfDomain, "point lies outside the domain");
}

}  // namespace detail

/// E[(y_hat - y)^2 | x] = sigma(x)^2 + (y_hat - g(x))^2.
inline double conditional_loss(const DistributionSpec& spec, double y_hat, std::span<const double> x) {
  detail::require_in_domain(spec, x);
  const double s = sigma_at(spec, x);
  const double r = y_hat - truth_at(spec, x);
  return s * s + r * r;
}

inline double regret(const DistributionSpec& spec, double y_hat, std::span<const double> x) {
  detail::require_in_domain(spec, x);
  const double r = y_hat - truth_at(spec, x);
  return r * r;
}

struct NoiseConstants {
  double sigma_floor = 0.0;  // sigma_min^2
  double rho = 0.0;          // 2 Phi(-1)
  double rho_floor = 0.1;
  double C_y = 0.0;          // sqrt(2) (sup|g| + sigma_max)
};

inline double gaussian_two_sided_tail_at_one() { return std::erfc(1.0 / std::numbers::sqrt2); }

inline NoiseConstants noise_constants(const DistributionSpec& spec) {
  NoiseConstants c;
  c.sigma_floor = spec.sigma_min * spec.sigma_min;
  c.rho = gaussian_two_sided_tail_at_one();
  c.C_y = std::numbers::sqrt2 * (truth_sup(spec) + spec.sigma_max);
  return c;
}

/// Monte Carlo evidence for the noise constants at random probe points.
struct NoiseCheck {
  struct Probe {
    std::vector<double> x;
    double margin_freq = 0.0;     // P((y - g)^2 >= sigma_min^2 | x)
    double margin_stderr = 0.0;
    bool margin_ok = false;       // freq >= rho - 3 stderr
    std::vector<double> tail_freq;  // P(|y| >= t | x) for t in tail_points
    std::vector<bool> tail_ok;
  };
  std::vector<double> tail_points{1.0, 2.0, 3.0};
  std::vector<Probe> probes;
  [[nodiscard]] bool all_ok() const {
    for (const auto& p : probes) {
      if (!p.margin_ok) return false;
      for (bool b : p.tail_ok) {
        if (!b) return false;
      }
    }
    return true;
  }
};

inline NoiseCheck check_noise_constants(const DistributionSpec& spec, std::size_t probes, std::size_t draws, std::uint64_t seed) {
  const NoiseConstants nc = noise_constants(spec);
  NoiseCheck out;
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(spec.dim));
  const double m = static_cast<double>(draws);
  for (std::size_t k = 0; k < probes; ++k) {
    sample_input(spec, rng, x);
    const double g = truth_at(spec, x);
    const double s = sigma_at(spec, x);
    std::size_t margin = 0;
    std::vector<std::size_t> tails(out.tail_points.size(), 0);
    for (std::size_t i = 0; i < draws; ++i) {
      const double eps = s * rng.normal();
      if (eps * eps >= nc.sigma_floor) ++margin;
      const double y = std::abs(g + eps);
      for (std::size_t t = 0; t < tails.size(); ++t) tails[t] += y >= out.tail_points[t] ? 1 : 0;
    }
    NoiseCheck::Probe pr;
    pr.x = x;
    pr.margin_freq = static_cast<double>(margin) / m;
    pr.margin_stderr = std::sqrt(pr.margin_freq * (1.0 - pr.margin_freq) / m);
    pr.margin_ok = pr.margin_freq >= nc.rho - 3.0 * std::max(pr.margin_stderr, std::sqrt(nc.rho * (1 - nc.rho) / m));
    for (std::size_t t = 0; t < tails.size(); ++t) {
      const double f = static_cast<double>(tails[t]) / m;
      const double bound = 2.0 * std::exp(-out.tail_points[t] * out.tail_points[t] / (nc.C_y * nc.C_y));
      const double se = std::sqrt(std::max(f * (1.0 - f), bound * (1.0 - std::min(bound, 1.0))) / m);
      pr.tail_freq.push_back(f);
      pr.tail_ok.push_back(f <= bound + 3.0 * se);
    }
    out.probes.push_back(std::move(pr));
  }
  return out;
}

struct SubsetSelection {
  std::vector<std::size_t> indices;
  std::vector<char> z;  // delta_i above the radius threshold
  std::vector<char> y;  // |y_i| below the label cap
  std::vector<char> w;  // (y_i - g(x_i))^2 >= sigma_min^2
  double radius_threshold = 0.0;  // (2 C1 n)^{-1/d}, C1 = C_D vol(B(0,1))
  double label_cap = 0.0;         // C_y sqrt(log(4 / rho))
  double sigma_floor = 0.0;
};

/// Points that are well separated, moderately labelled and genuinely noisy.
inline SubsetSelection noisy_separated_subset(const Dataset& data, const NnRadii& radii, const DistributionSpec& spec) {
  if (radii.radii.size() != data.size()) throw Error(ErrorKind::MismatchedLengths, "radii and dataset differ in length");
  const NoiseConstants nc = noise_constants(spec);
  const std::size_t n = data.size();
  const double c1 = spec.C_D * unit_ball_volume(spec.dim);
  SubsetSelection sel;
  sel.radius_threshold = std::pow(2.0 * c1 * static_cast<double>(n), -1.0 / spec.dim);
  sel.label_cap = nc.C_y * std::sqrt(std::log(4.0 / nc.rho));
  sel.sigma_floor = nc.sigma_floor;
  sel.z.resize(n);
  sel.y.resize(n);
  sel.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = data.labels[i] - truth_at(spec, data.point(i));
    sel.z[i] = radii.radii[i] >= sel.radius_threshold;
    sel.y[i] = std::abs(data.labels[i]) <= sel.label_cap;
    sel.w[i] = resid * resid >= sel.sigma_floor;
    if (sel.z[i] && sel.y[i] && sel.w[i]) sel.indices.push_back(i);
  }
  return sel;
}

struct FractionEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of |Omega cap B(x0, delta)| / |B(x0, delta)|.
inline FractionEstimate domain_ball_fraction(const DistributionSpec& spec, std::span<const double> x0, double delta,
                                             std::size_t m, std::uint64_t seed) {
  if (x0.size() != static_cast<std::size_t>(spec.dim) ||
      squared_norm(x0) > spec.domain_radius * spec.domain_radius * (1.0 + 1e-12)) {
    throw Error(ErrorKind::OutOfDomain, "ball center lies outside the closed domain");
  }
  if (!(delta > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "ball radius must be positive");
  if (m == 0) throw Error(ErrorKind::InvalidParams, "need at least one sample");
  Rng rng(seed);
  std::vector<double> u(x0.size());
  std::vector<double> x(x0.size());
  std::size_t inside = 0;
  const double R2 = spec.domain_radius * spec.domain_radius;
  for (std::size_t i = 0; i < m; ++i) {
    detail::draw_in_ball(rng, spec.dim, delta, u);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = x0[j] + u[j];
    inside += squared_norm(x) <= R2 ? 1 : 0;
  }
  FractionEstimate est;
  est.estimate = static_cast<double>(inside) / static_cast<double>(m);
  est.std_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(m));
  return est;
}

}  // namespace soblab
