#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "soblab/bump.hpp"
#include "soblab/error.hpp"
#include "soblab/model.hpp"
#include "soblab/parallel.hpp"
#include "soblab/quadrature.hpp"
#include "soblab/random.hpp"

namespace soblab {

/// u = sum_j w_j psi_{r_j}(. - c_j); supports may overlap.
struct BumpSum {
  int dim = 1;
  std::vector<TruthBump> bumps;

  [[nodiscard]] double value(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& b : bumps) s += b.weight * bump_eval(b.center, b.radius, x);
    return s;
  }

  /// D^alpha u at x for every alpha in `alphas`.
  void partials(std::span<const MultiIndex> alphas, std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    double u[kMaxDim];
    for (const auto& b : bumps) {
      double t = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        u[j] = (x[j] - b.center[j]) / b.radius;
        t += u[j] * u[j];
      }
      if (t >= 1.0) continue;
      const auto jet = profile_jet(t);
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        out[a] += b.weight * partial_from_jet(alphas[a], jet, std::span<const double>(u, x.size())) /
                  detail::int_pow(b.radius, order(alphas[a]));
      }
    }
  }
};

inline BumpSum random_bump_sum(Rng& rng, int d, double center_box, double r_lo, double r_hi) {
  BumpSum u;
  u.dim = d;
  const int count = 1 + static_cast<int>(rng.uniform() * 4.0);
  for (int j = 0; j < count; ++j) {
    TruthBump b;
    for (int a = 0; a < d; ++a) b.center.push_back(rng.uniform(-center_box, center_box));
    b.radius = rng.uniform(r_lo, r_hi);
    b.weight = rng.normal();
    u.bumps.push_back(std::move(b));
  }
  return u;
}

struct MorreyTrial {
  double lhs = 0.0;
  double rhs = 0.0;
  bool violation = false;
};

inline constexpr double kMorreySlack = 1e-9;

/// One-dimensional first-order case:
/// |u(x1) - u(x0)|^p <= (2 delta)^{p-1} int_{x0 - 2 delta}^{x0 + 2 delta} |u'|^p.
/// The integral is split at bump plateau and support edges and at the zeros of u', so
/// each piece is smooth up to its endpoints.
inline MorreyTrial morrey_exact_trial(const BumpSum& u, double x0, double x1, double delta, double p) {
  const double a = x0 - 2.0 * delta;
  const double b = x0 + 2.0 * delta;
  std::vector<double> breaks{a, b};
  for (const auto& bump : u.bumps) {
    const double c = bump.center[0];
    const double r = bump.radius;
    for (double e : {c - r, c - r / 2, c + r / 2, c + r}) {
      if (e > a && e < b) breaks.push_back(e);
    }
  }
  std::sort(breaks.begin(), breaks.end());

  static constexpr MultiIndex kFirst{1, 0, 0};
  auto du = [&](double x) {
    double out = 0.0;
    u.partials(std::span<const MultiIndex>(&kFirst, 1), std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
  };

  // bracket sign changes of u' on a fine grid and refine them by bisection
  std::vector<double> all = breaks;
  constexpr int kScan = 64;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double lo = breaks[i];
    double flo = du(lo);
    for (int s = 1; s <= kScan; ++s) {
      const double hi = breaks[i] + (breaks[i + 1] - breaks[i]) * s / kScan;
      const double fhi = du(hi);
      if ((flo < 0.0 && fhi > 0.0) || (flo > 0.0 && fhi < 0.0)) {
        double l = lo;
        double h = hi;
        for (int it = 0; it < 200 && h - l > 1e-15 * std::max(1.0, std::abs(l)); ++it) {
          const double m = 0.5 * (l + h);
          const double fm = du(m);
          if ((fm < 0.0) == (flo < 0.0) && fm != 0.0) {
            l = m;
          } else {
            h = m;
          }
        }
        all.push_back(0.5 * (l + h));
      }
      lo = hi;
      flo = fhi;
    }
  }

  QuadratureOptions opts;
  opts.abs_tol = 1e-15;
  opts.max_panels = 1 << 12;
  const double integral = integrate_1d(all, [&](double x) { return abs_pow(du(x), p); }, opts);

  MorreyTrial t;
  const double ux1 = u.value(std::span<const double>(&x1, 1));
  const double ux0 = u.value(std::span<const double>(&x0, 1));
  t.lhs = abs_pow(ux1 - ux0, p);
  t.rhs = std::pow(2.0 * delta, p - 1.0) * integral;
  t.violation = t.lhs > t.rhs + kMorreySlack;
  return t;
}

struct MorreyReport {
  std::vector<MorreyTrial> trials;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // largest lhs / rhs over trials with rhs > 0
};

/// Randomised exact-variant trials for d = 1, k = 1.
inline MorreyReport morrey_check_exact(const SobolevParams& params, std::size_t trials, std::uint64_t seed, unsigned threads = 1) {
  if (params.d != 1 || params.k != 1) throw Error(ErrorKind::UnsupportedExactVariant, "exact Morrey variant needs d = 1 and k = 1");
  MorreyReport rep;
  rep.trials.resize(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const BumpSum u = random_bump_sum(rng, 1, 1.0, 0.05, 0.6);
    const double x0 = rng.uniform(-1.0, 1.0);
    const double delta = std::exp(rng.uniform(std::log(1e-3), std::log(0.5)));
    const double x1 = x0 + delta * rng.uniform(-1.0, 1.0);
    rep.trials[i] = morrey_exact_trial(u, x0, x1, delta, params.p);
  });
  for (const auto& t : rep.trials) {
    rep.violations += t.violation ? 1 : 0;
    if (t.rhs > 0.0) rep.max_ratio = std::max(rep.max_ratio, t.lhs / t.rhs);
  }
  return rep;
}

/// int_{B(x0, R)} |D^alpha u|^p for every |alpha| <= k, in polar / spherical coordinates.
inline std::vector<double> local_seminorms(const BumpSum& u, int k, double p, std::span<const double> x0, double R,
                                           const QuadratureOptions& opts) {
  const int d = u.dim;
  const auto alphas = multi_indices(d, k);
  const std::size_t na = alphas.size();
  std::vector<double> vals(na);
  std::vector<std::vector<double>> breaks;
  breaks.push_back({0.0, R / 2, R});
  if (d == 1) breaks[0] = {-R, 0.0, R};
  if (d >= 2) breaks.push_back({0.0, std::numbers::pi, 2.0 * std::numbers::pi});
  if (d == 3) breaks.push_back({0.0, std::numbers::pi / 2, std::numbers::pi});
  auto f = [&](std::span<const double> q, std::span<double> out) {
    double x[kMaxDim];
    double jac = 1.0;
    if (d == 1) {
      x[0] = x0[0] + q[0];
    } else if (d == 2) {
      x[0] = x0[0] + q[0] * std::cos(q[1]);
      x[1] = x0[1] + q[0] * std::sin(q[1]);
      jac = q[0];
    } else {
      const double st = std::sin(q[2]);
      x[0] = x0[0] + q[0] * st * std::cos(q[1]);
      x[1] = x0[1] + q[0] * st * std::sin(q[1]);
      x[2] = x0[2] + q[0] * std::cos(q[2]);
      jac = q[0] * q[0] * st;
    }
    u.partials(alphas, std::span<const double>(x, static_cast<std::size_t>(d)), std::span<double>(vals));
    for (std::size_t a = 0; a < na; ++a) out[a] = jac * abs_pow(vals[a], p);
  };
  return integrate_box(breaks, na, f, opts).values;
}

struct MorreyDiagnostic {
  std::vector<double> deltas;             // geometric, coarse to fine
  std::vector<std::vector<double>> ratio;  // [trial][level]
  double coarse_max = 0.0;                // max ratio over the coarse half of the levels
  double fine_max = 0.0;
  [[nodiscard]] double growth() const { return coarse_max > 0.0 ? fine_max / coarse_max : 0.0; }
};

/// Records |u(x1) - u(x0)|^p / (delta^{kp-d} ||u||^p_{W^{k,p}(B(x0, 2 delta))}) along a
/// geometric delta grid; bounded growth toward small delta is the expected behaviour.
inline MorreyDiagnostic morrey_check_diagnostic(const SobolevParams& params, std::size_t trials, std::uint64_t seed,
                                                std::size_t levels = 8, unsigned threads = 1) {
  MorreyDiagnostic out;
  for (std::size_t l = 0; l < levels; ++l) out.deltas.push_back(0.5 * std::ldexp(1.0, -static_cast<int>(l)));
  out.ratio.assign(trials, std::vector<double>(levels, 0.0));
  QuadratureOptions opts;
  opts.rel_tol = 1e-6;
  opts.max_panels = 8;
  opts.throw_on_failure = false;
  const int d = params.d;
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const BumpSum u = random_bump_sum(rng, d, 0.5, 0.3, 0.8);
    std::vector<double> x0(static_cast<std::size_t>(d));
    std::vector<double> dir(static_cast<std::size_t>(d));
    for (auto& v : x0) v = rng.uniform(-0.5, 0.5);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& v : dir) {
        v = rng.normal();
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    for (auto& v : dir) v /= std::sqrt(norm2);
    const double frac = rng.uniform(0.2, 0.9);
    const double u0 = u.value(x0);
    for (std::size_t l = 0; l < levels; ++l) {
      const double delta = out.deltas[l];
      std::vector<double> x1(x0);
      for (std::size_t j = 0; j < x1.size(); ++j) x1[j] += frac * delta * dir[j];
      const double lhs = abs_pow(u.value(x1) - u0, params.p);
      const auto semi = local_seminorms(u, params.k, params.p, x0, 2.0 * delta, opts);
      double local = 0.0;
      for (double s : semi) local += std::pow(s, 1.0 / params.p);
      const double denom = std::pow(delta, params.k * params.p - d) * std::pow(local, params.p);
      out.ratio[i][l] = denom > 0.0 ? lhs / denom : 0.0;
    }
  });
  for (const auto& row : out.ratio) {
    for (std::size_t l = 0; l < levels; ++l) {
      double& target = l < levels / 2 ? out.coarse_max : out.fine_max;
      target = std::max(target, row[l]);
    }
  }
  return out;
}

}  // namespace soblab
