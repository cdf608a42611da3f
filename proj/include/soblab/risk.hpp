#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "soblab/bump.hpp"
#include "soblab/error.hpp"
#include "soblab/interpolant.hpp"
#include "soblab/model.hpp"
#include "soblab/parallel.hpp"
#include "soblab/quadrature.hpp"
#include "soblab/random.hpp"

namespace soblab {

enum class RiskMethod { MonteCarlo, SemiAnalytic };

inline const char* to_string(RiskMethod m) { return m == RiskMethod::MonteCarlo ? "monte-carlo" : "semi-analytic"; }

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(samples); 0 for semi-analytic values
  std::size_t samples = 0;
  RiskMethod method = RiskMethod::MonteCarlo;
};

inline constexpr std::size_t kMinRiskSamples = 100;
inline constexpr std::size_t kRiskBlocks = 64;

namespace detail {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double delta = o.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += o.m2 + delta * delta * na * nb / total;
    n += o.n;
  }
};

/// Splits m draws into a fixed number of seeded blocks, evaluates sample(rng) in each,
/// and merges the blocks in index order, so the result ignores the thread count.
template <class Sample>
RiskEstimate blocked_mc(std::size_t m, std::uint64_t seed, unsigned threads, Sample&& sample) {
  if (m < kMinRiskSamples) throw Error(ErrorKind::InvalidParams, "need at least 100 Monte Carlo samples");
  std::vector<Moments> blocks(kRiskBlocks);
  parallel_for(kRiskBlocks, threads, [&](std::size_t b) {
    const std::size_t count = m / kRiskBlocks + (b < m % kRiskBlocks ? 1 : 0);
    Rng rng(derive_seed(seed, {b}));
    for (std::size_t i = 0; i < count; ++i) blocks[b].add(sample(rng));
  });
  Moments total;
  for (const auto& b : blocks) total.merge(b);
  RiskEstimate est;
  est.mean = total.mean;
  est.samples = total.n;
  const double var = total.n > 1 ? total.m2 / static_cast<double>(total.n - 1) : 0.0;
  est.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(total.n));
  return est;
}

}  // namespace detail

/// (1/m) sum_j (predictor(X_j) - g(X_j))^2 over X_j ~ p_x. No labels are drawn: the
/// regret has the closed form (y_hat - g)^2.
template <class Predictor>
RiskEstimate excess_risk_mc(const Predictor& predictor, const DistributionSpec& spec, std::size_t m, std::uint64_t seed,
                            unsigned threads = 1) {
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  return detail::blocked_mc(m, seed, threads, [&](Rng& rng) {
    double buf[kMaxDim];
    std::span<double> x(buf, d);
    sample_input(spec, rng, x);
    const double r = predictor(std::span<const double>(x)) - truth_at(spec, x);
    return r * r;
  });
}

/// Joint estimate of E[loss(predictor)] - E[loss(g)] with labels drawn, one pair per sample.
template <class Predictor>
RiskEstimate excess_risk_joint_mc(const Predictor& predictor, const DistributionSpec& spec, std::size_t m,
                                  std::uint64_t seed, unsigned threads = 1) {
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  return detail::blocked_mc(m, seed, threads, [&](Rng& rng) {
    double buf[kMaxDim];
    std::span<double> x(buf, d);
    sample_input(spec, rng, x);
    const double g = truth_at(spec, x);
    const double y = g + sigma_at(spec, x) * rng.normal();
    const double a = predictor(std::span<const double>(x)) - y;
    const double b = g - y;
    return a * a - b * b;
  });
}

/// E[sigma(x)^2], the Bayes risk.
inline RiskEstimate bayes_risk_mc(const DistributionSpec& spec, std::size_t m, std::uint64_t seed, unsigned threads = 1) {
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  return detail::blocked_mc(m, seed, threads, [&](Rng& rng) {
    double buf[kMaxDim];
    std::span<double> x(buf, d);
    sample_input(spec, rng, x);
    const double s = sigma_at(spec, x);
    return s * s;
  });
}

/// Exact L2(mu) excess risk of a bump interpolant under the uniform pure-noise model:
/// sum_i y_i^2 r_i^d M_2 / |Omega|, M_2 = int psi_1^2.
/// With `clip_boundary` (d = 1 only) a support that crosses the domain edge is integrated
/// over its clipped interval by quadrature instead of being rejected.
inline RiskEstimate excess_risk_semianalytic(const BumpInterpolant& f, const DistributionSpec& spec, bool clip_boundary = false) {
  if (!spec.pure_noise()) throw Error(ErrorKind::UnsupportedSpec, "semi-analytic risk needs g = 0");
  if (spec.density != DensityKind::Uniform) throw Error(ErrorKind::UnsupportedSpec, "semi-analytic risk needs a uniform density");
  if (f.dim != spec.dim) throw Error(ErrorKind::UnsupportedSpec, "interpolant and spec differ in dimension");
  if (clip_boundary && spec.dim != 1) throw Error(ErrorKind::UnsupportedSpec, "boundary clipping is implemented for d = 1 only");
  const double R = spec.domain_radius;
  const double m2 = l2_modulus(spec.dim);
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = f.weights[i];
    if (w == 0.0) continue;
    const double r = f.radii[i];
    const auto c = f.center(i);
    if (std::sqrt(squared_norm(c)) + r <= R) {
      total += w * w * std::pow(r, spec.dim) * m2;
      continue;
    }
    if (!clip_boundary) throw Error(ErrorKind::UnsupportedSpec, "support " + std::to_string(i) + " crosses the domain boundary");
    const double c0 = c[0];
    auto clip = [&](double v) { return std::clamp(v, -R, R); };
    const double part = integrate_1d({clip(c0 - r), clip(c0 - r / 2), clip(c0 + r / 2), clip(c0 + r)}, [&](double x) {
      const double b = bump_eval(c, r, std::span<const double>(&x, 1));
      return b * b;
    });
    total += w * w * part;
  }
  RiskEstimate est;
  est.mean = total / spec.domain_volume();
  est.method = RiskMethod::SemiAnalytic;
  return est;
}

}  // namespace soblab
